use std::f64::consts::{PI, TAU};

use heisenrep::bundle::{
    flatness_residual, gauge_transform_expr, holonomy, holonomy_class, winding_number, DiscretePath, Expr,
    FlatConnection, PolarGrid, PolarPoint,
};
use num_complex::Complex64;
use proptest::prelude::*;

/// Closed polygon around (x0, y0); `None` when a vertex or edge hits the origin.
fn polygon(x0: f64, y0: f64, radius: f64, n: usize) -> Option<DiscretePath> {
    let mut v = Vec::with_capacity(n + 1);
    for k in 0..n {
        let a = TAU * k as f64 / n as f64;
        v.push(PolarPoint::from_cartesian(x0 + radius * a.cos(), y0 + radius * a.sin()).ok()?);
    }
    v.push(v[0]);
    DiscretePath::new(v, true).ok()
}

proptest! {
    #[test]
    fn circle_holonomy_counts_windings(lambda in -3.0f64..3.0, turns in -4i64..=4, r in 0.05f64..5.0, theta0 in -PI..PI) {
        prop_assume!(turns != 0);
        let path = DiscretePath::circle(r, theta0, turns, 12).unwrap();
        prop_assert_eq!(winding_number(&path).unwrap(), turns);
        let want = Complex64::cis(-TAU * lambda * turns as f64);
        prop_assert!((holonomy(&FlatConnection::new(lambda), &path) - want).norm() < 1e-12);
    }

    #[test]
    fn loops_away_from_origin_are_trivial(lambda in -3.0f64..3.0, x0 in 1.5f64..4.0, radius in 0.1f64..1.4) {
        let path = polygon(x0, 0.3, radius, 30).unwrap();
        prop_assert_eq!(winding_number(&path).unwrap(), 0);
        prop_assert!((holonomy(&FlatConnection::new(lambda), &path) - 1.0).norm() < 1e-12);
    }

    #[test]
    fn winding_matches_enclosure(x0 in -2.0f64..2.0, y0 in -2.0f64..2.0, radius in 0.1f64..3.0) {
        let d = x0.hypot(y0);
        prop_assume!((d - radius).abs() > 1e-3);
        if let Some(path) = polygon(x0, y0, radius, 200) {
            // the 200-gon and the circle enclose the origin alike unless it sits in the sliver between them
            let inscribed = radius * (PI / 200.0).cos();
            prop_assume!(d < inscribed || d > radius);
            prop_assert_eq!(winding_number(&path).unwrap(), i64::from(d < radius));
        }
    }

    #[test]
    fn gauge_transformations_keep_loop_holonomy(
        lambda in -2.0f64..2.0, a in -2.0f64..2.0, b in -2.0f64..2.0,
        x0 in -1.5f64..1.5, y0 in -1.5f64..1.5, radius in 0.2f64..2.0,
    ) {
        let conn = FlatConnection::new(lambda);
        let chi = Expr::parse(&format!("{a}*r*cos(theta) + {b}*sin(2*theta)*exp(-r)")).unwrap();
        let moved = gauge_transform_expr(&conn, chi);
        prop_assert!((holonomy_class(&moved) - holonomy_class(&conn)).abs() < 1e-12);
        if let Some(path) = polygon(x0, y0, radius, 48) {
            prop_assert!((holonomy(&moved, &path) - holonomy(&conn, &path)).norm() < 1e-10);
        }
    }

    #[test]
    fn reversal_conjugates_and_concatenation_multiplies(lambda in -2.0f64..2.0, r in 0.2f64..3.0, theta in -PI..PI) {
        let conn = gauge_transform_expr(&FlatConnection::new(lambda), Expr::parse("r^2*sin(theta)").unwrap());
        let q = PolarPoint::new(r, theta).unwrap();
        let path = DiscretePath::standard_to(&q).unwrap();
        let back = holonomy(&conn, &path.reversed());
        prop_assert!((back - holonomy(&conn, &path).conj()).norm() < 1e-12);
        let wound = path.concat(&DiscretePath::circle(r, q.theta(), 1, 16).unwrap()).unwrap();
        let want = holonomy(&conn, &path) * holonomy(&conn, &DiscretePath::circle(r, q.theta(), 1, 16).unwrap());
        prop_assert!((holonomy(&conn, &wound) - want).norm() < 1e-12);
    }

    #[test]
    fn holonomy_class_is_lambda_mod_one(lambda in -10.0f64..10.0, shift in -5i64..5) {
        let c = holonomy_class(&FlatConnection::new(lambda));
        prop_assert!((0.0..1.0).contains(&c));
        let shifted = holonomy_class(&FlatConnection::new(lambda + shift as f64));
        prop_assert!((c - shifted).abs() < 1e-12 || (c - shifted).abs() > 1.0 - 1e-12);
    }
}

#[test]
fn analytic_connections_are_flat() {
    let grid = PolarGrid::uniform((0.1, 5.0), 50, (-PI, PI), 72).unwrap();
    for (lambda, chi) in [(0.0, "0"), (0.3, "r^2"), (1.7, "exp(-r)*cos(3*theta)"), (-0.4, "theta*r + pow(r, 3)")] {
        let conn = gauge_transform_expr(&FlatConnection::new(lambda), Expr::parse(chi).unwrap());
        assert!(flatness_residual(&conn, &grid) < 1e-10, "{chi}");
    }
}
