//! Property tests for the expression layer: symbolic derivatives against
//! central finite differences, and printing/parsing as inverse maps.

use proptest::prelude::*;
use tractorcalc::exprkit::{EvalScratch, ExprId, Pool};
use tractorcalc::rng::SplitMix64;

// ---- deterministic 1000-tree derivative check ----

fn gen_tree(p: &mut Pool, rng: &mut SplitMix64, depth: u32) -> ExprId {
    let leaf = depth == 0 || rng.next_u64() % 5 == 0;
    if leaf {
        match rng.next_u64() % 4 {
            0 => {
                let k = (rng.next_u64() % 7) as i64 - 3;
                p.int(k)
            }
            1 => {
                let num = (rng.next_u64() % 9) as i64 - 4;
                let den = (rng.next_u64() % 4) as i64 + 1;
                p.rat(num, den)
            }
            2 => p.dec(rng.in_range(-2.0, 2.0)),
            _ => {
                let c = (rng.next_u64() % 3) as usize;
                p.coord(c)
            }
        }
    } else {
        match rng.next_u64() % 14 {
            0 | 1 => {
                let a = gen_tree(p, rng, depth - 1);
                let b = gen_tree(p, rng, depth - 1);
                p.add(a, b)
            }
            2 | 3 => {
                let a = gen_tree(p, rng, depth - 1);
                let b = gen_tree(p, rng, depth - 1);
                p.sub(a, b)
            }
            4 | 5 => {
                let a = gen_tree(p, rng, depth - 1);
                let b = gen_tree(p, rng, depth - 1);
                p.mul(a, b)
            }
            6 => {
                let a = gen_tree(p, rng, depth - 1);
                let b = gen_tree(p, rng, depth - 1);
                p.div(a, b)
            }
            7 => {
                let a = gen_tree(p, rng, depth - 1);
                p.sin(a)
            }
            8 => {
                let a = gen_tree(p, rng, depth - 1);
                p.cos(a)
            }
            9 => {
                let a = gen_tree(p, rng, depth - 1);
                p.exp(a)
            }
            10 => {
                let a = gen_tree(p, rng, depth - 1);
                p.log(a)
            }
            11 => {
                let a = gen_tree(p, rng, depth - 1);
                p.sqrt(a)
            }
            12 => {
                let a = gen_tree(p, rng, depth - 1);
                let k = (rng.next_u64() % 5) as i32 - 2;
                p.powi(a, k)
            }
            _ => {
                let a = gen_tree(p, rng, depth - 1);
                match rng.next_u64() % 3 {
                    0 => p.tan(a),
                    1 => p.sinh(a),
                    _ => p.cosh(a),
                }
            }
        }
    }
}

#[test]
fn derivative_matches_central_differences_on_1000_random_trees() {
    let mut rng = SplitMix64::new(0x5eed_0001);
    let mut checked = 0usize;
    let h = 1e-5;
    for _ in 0..1000 {
        let mut pool = Pool::new(["x", "y", "z"]);
        let e = gen_tree(&mut pool, &mut rng, 6);
        let d = pool.diff(e, 0);
        let pt = [
            rng.in_range(-1.3, 1.5),
            rng.in_range(-1.3, 1.5),
            rng.in_range(-1.3, 1.5),
        ];
        let mut scratch = EvalScratch::new();
        let at = |pool: &Pool, id, x: f64, sc: &mut EvalScratch| {
            sc.begin(pool);
            sc.eval(pool, id, &[x, pt[1], pt[2]])
        };
        // skip ill-conditioned samples: domain failures anywhere in the
        // stencil, or magnitudes where the difference quotient loses the
        // digits the bound asks for
        let fm = match at(&pool, e, pt[0] - h, &mut scratch) {
            Ok(v) if v.abs() <= 1e4 => v,
            _ => continue,
        };
        let fp = match at(&pool, e, pt[0] + h, &mut scratch) {
            Ok(v) if v.abs() <= 1e4 => v,
            _ => continue,
        };
        match at(&pool, e, pt[0], &mut scratch) {
            Ok(v) if v.abs() <= 1e4 => {}
            _ => continue,
        }
        let exact = match at(&pool, d, pt[0], &mut scratch) {
            Ok(v) if v.abs() <= 1e4 => v,
            _ => continue,
        };
        let central = (fp - fm) / (2.0 * h);
        let err = (central - exact).abs();
        assert!(
            err <= 1e-5 * (1.0 + exact.abs()),
            "residual {err:.3e} for {} at {pt:?} (exact {exact:.6e}, central {central:.6e})",
            pool.to_text(e)
        );
        checked += 1;
    }
    // the generator must not degenerate into all-skipped samples
    assert!(checked >= 600, "only {checked} of 1000 trees were usable");
}

// ---- proptest: structural recipes ----

#[derive(Clone, Debug)]
enum Recipe {
    Int(i8),
    Rat(i8, u8),
    Coord(u8),
    Un(u8, Box<Recipe>),
    Bin(u8, Box<Recipe>, Box<Recipe>),
    Pow(Box<Recipe>, i8),
}

fn build(p: &mut Pool, r: &Recipe) -> ExprId {
    match r {
        Recipe::Int(k) => p.int(*k as i64),
        Recipe::Rat(num, den) => p.rat(*num as i64, *den as i64 + 1),
        Recipe::Coord(c) => p.coord(*c as usize % 3),
        Recipe::Un(op, a) => {
            let a = build(p, a);
            match op % 9 {
                0 => p.neg(a),
                1 => p.sin(a),
                2 => p.cos(a),
                3 => p.tan(a),
                4 => p.exp(a),
                5 => p.log(a),
                6 => p.sqrt(a),
                7 => p.sinh(a),
                _ => p.cosh(a),
            }
        }
        Recipe::Bin(op, a, b) => {
            let a = build(p, a);
            let b = build(p, b);
            match op % 4 {
                0 => p.add(a, b),
                1 => p.sub(a, b),
                2 => p.mul(a, b),
                _ => p.div(a, b),
            }
        }
        Recipe::Pow(a, k) => {
            let a = build(p, a);
            p.powi(a, *k as i32)
        }
    }
}

fn recipe_strategy() -> impl Strategy<Value = Recipe> {
    let leaf = prop_oneof![
        any::<i8>().prop_map(Recipe::Int),
        (any::<i8>(), any::<u8>()).prop_map(|(p, q)| Recipe::Rat(p, q)),
        (0u8..3).prop_map(Recipe::Coord),
    ];
    leaf.prop_recursive(6, 64, 3, |inner| {
        prop_oneof![
            (any::<u8>(), inner.clone()).prop_map(|(op, a)| Recipe::Un(op, Box::new(a))),
            (any::<u8>(), inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| Recipe::Bin(op, Box::new(a), Box::new(b))),
            (inner, -3i8..4).prop_map(|(a, k)| Recipe::Pow(Box::new(a), k)),
        ]
    })
}

proptest! {
    #[test]
    fn building_twice_interns_to_the_same_node(r in recipe_strategy()) {
        let mut pool = Pool::new(["x", "y", "z"]);
        let a = build(&mut pool, &r);
        let size = pool.len();
        let b = build(&mut pool, &r);
        prop_assert_eq!(a, b);
        prop_assert_eq!(pool.len(), size, "second build allocated nodes");
    }

    #[test]
    fn print_then_parse_recovers_the_node(r in recipe_strategy()) {
        let mut pool = Pool::new(["x", "y", "z"]);
        let a = build(&mut pool, &r);
        let text = pool.to_text(a);
        let back = pool.parse(&text);
        prop_assert!(back.is_ok(), "printed form {:?} failed to parse: {}", text, back.unwrap_err());
        prop_assert_eq!(back.unwrap(), a, "printed form {:?}", text);
    }

    #[test]
    fn derivative_of_reparsed_equals_derivative_of_original(r in recipe_strategy()) {
        let mut pool = Pool::new(["x", "y", "z"]);
        let a = build(&mut pool, &r);
        let da = pool.diff(a, 1);
        let text = pool.to_text(a);
        let b = pool.parse(&text).unwrap();
        let db = pool.diff(b, 1);
        prop_assert_eq!(da, db);
    }
}
