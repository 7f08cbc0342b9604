//! Shared geometry fixtures for the integration suites. Metric entries are
//! written as source text and parsed, which exercises the expression grammar
//! on every test run.
#![allow(dead_code)]

use tractorcalc::exprkit::Pool;
use tractorcalc::geocalc::{Geometry, Scale, TensorField};

fn metric_from_text(pool: &mut Pool, entries: &[[&str; 4]; 4]) -> TensorField {
    let mut g = TensorField::zeros(pool, &[4, 4]);
    for a in 0..4 {
        for b in 0..4 {
            let e = pool.parse(entries[a][b]).unwrap();
            g.set(&[a, b], e);
        }
    }
    g
}

fn field_from_text(pool: &mut Pool, entries: &[&str]) -> TensorField {
    let data = entries.iter().map(|s| pool.parse(s).unwrap()).collect();
    TensorField::from_entries(&[entries.len()], data)
}

/// S^2 x S^2 with unit radii; visibly curved, nonzero Weyl, Riemannian.
/// The candidate field is the first azimuthal rotation, a genuine Killing
/// field that is not conformally isotropic.
pub fn sphere_product() -> Geometry {
    let mut pool = Pool::new(["th1", "ph1", "th2", "ph2"]);
    let g = metric_from_text(
        &mut pool,
        &[
            ["1", "0", "0", "0"],
            ["0", "sin(th1)^2", "0", "0"],
            ["0", "0", "1", "0"],
            ["0", "0", "0", "sin(th2)^2"],
        ],
    );
    let kappa = field_from_text(&mut pool, &["0", "1", "0", "0"]);
    Geometry::new(
        pool,
        vec![1, 1, 1, 1],
        g,
        kappa,
        vec![(0.4, 2.7), (-3.0, 3.0), (0.4, 2.7), (-3.0, 3.0)],
        20,
        2024,
        Scale::Preferred,
        None,
    )
    .unwrap()
}

/// Flat Minkowski space with a null translation kappa = d_x + d_t.
pub fn flat_null_translation() -> Geometry {
    let mut pool = Pool::new(["x", "y", "z", "t"]);
    let g = metric_from_text(
        &mut pool,
        &[
            ["1", "0", "0", "0"],
            ["0", "1", "0", "0"],
            ["0", "0", "1", "0"],
            ["0", "0", "0", "-1"],
        ],
    );
    let kappa = field_from_text(&mut pool, &["1", "0", "0", "1"]);
    Geometry::new(
        pool,
        vec![1, 1, 1, -1],
        g,
        kappa,
        vec![(-1.0, 1.0); 4],
        20,
        41,
        Scale::Preferred,
        None,
    )
    .unwrap()
}

/// Conformally flat Lorentzian metric exp(2*0.1*x*y) * flat, same null
/// translation candidate; Weyl and Cotton vanish but the scale is not flat.
pub fn conformally_flat() -> Geometry {
    let mut pool = Pool::new(["x", "y", "z", "t"]);
    let w = "exp(x*y/5)";
    let zero = "0";
    let mut rows = [[zero; 4]; 4];
    rows[0][0] = w;
    rows[1][1] = w;
    rows[2][2] = w;
    let neg = "-exp(x*y/5)";
    rows[3][3] = neg;
    let g = metric_from_text(&mut pool, &rows);
    let kappa = field_from_text(&mut pool, &["1", "0", "0", "1"]);
    Geometry::new(
        pool,
        vec![1, 1, 1, -1],
        g,
        kappa,
        vec![(-1.0, 1.0); 4],
        20,
        43,
        Scale::Unknown,
        None,
    )
    .unwrap()
}

/// A curved Fefferman-type metric on coordinates (x, y, u, v): the circle
/// bundle metric of a non-flat strictly pseudoconvex structure, with the
/// null fiber field kappa = d_v. Signature (3,1), nonzero Weyl, and every
/// hypothesis of the adjoint construction holds; the invariant scalar is
/// exactly -1/4.
pub fn fefferman_curved() -> Geometry {
    let mut pool = Pool::new(["x", "y", "u", "v"]);
    let g = metric_from_text(
        &mut pool,
        &[
            ["2", "0", "0", "0"],
            [
                "0",
                "(10*x^6 - 6*x^4 + 54*x^2 + 54)/(27*x^2 + 27)",
                "(-10*x^3 - 6*x)/(9*x^2 + 9)",
                "2*x^3/3 + 2*x",
            ],
            [
                "0",
                "(-10*x^3 - 6*x)/(9*x^2 + 9)",
                "1/(3*x^2 + 3)",
                "1",
            ],
            ["0", "2*x^3/3 + 2*x", "1", "0"],
        ],
    );
    let kappa = field_from_text(&mut pool, &["0", "0", "0", "1"]);
    Geometry::new(
        pool,
        vec![1, 1, 1, -1],
        g,
        kappa,
        vec![(0.0, 1.0), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
        20,
        2718,
        Scale::Preferred,
        None,
    )
    .unwrap()
}
