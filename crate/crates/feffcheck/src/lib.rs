//! feffcheck: a checker for Fefferman-type conformal structures.
//!
//! Given a chart, a metric and a candidate vector field in a geometry file,
//! the pipeline builds the tractor calculus of the conformal class, splits
//! the field's adjoint tractor, measures every identity the construction is
//! supposed to satisfy as a numerical residual, and renders a verdict. The
//! heavy lifting lives in the `tractorcalc` crate; this one owns the file
//! format, the verdict rules, the report, and the CLI.

pub mod format;
pub mod pipeline;
pub mod report;

/// The bundled example corpus, compiled in so `selftest` runs anywhere.
/// Sorted by name; each entry carries its expected verdict annotation.
pub mod corpus {
    pub const ENTRIES: &[(&str, &str)] = &[
        (
            "conformally_flat_null_4d.geom",
            include_str!("../corpus/conformally_flat_null_4d.geom"),
        ),
        (
            "flat_null_translation_3d.geom",
            include_str!("../corpus/flat_null_translation_3d.geom"),
        ),
        (
            "flat_null_translation_4d.geom",
            include_str!("../corpus/flat_null_translation_4d.geom"),
        ),
        (
            "heisenberg_fefferman.geom",
            include_str!("../corpus/heisenberg_fefferman.geom"),
        ),
        (
            "heisenberg_fefferman_flat.geom",
            include_str!("../corpus/heisenberg_fefferman_flat.geom"),
        ),
        (
            "perturbed_flat_negative_control.geom",
            include_str!("../corpus/perturbed_flat_negative_control.geom"),
        ),
        (
            "sphere_product_4d.geom",
            include_str!("../corpus/sphere_product_4d.geom"),
        ),
    ];
}
