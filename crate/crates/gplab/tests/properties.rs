//! Property-based tests for the structural identities the laboratory
//! relies on: spectral calculus on the torus, projection and windowing
//! inequalities, operator algebra, closed-form cross-checks, and
//! configuration hashing.

use std::f64::consts::TAU;

use gplab::diagnostics::{localized_momentum, Weight};
use gplab::grid::{Grid, PairField};
use gplab::hydro::HydroState;
use gplab::lab::{run_config_hash, RunConfig};
use gplab::linops::{family_pairing, swap, symplectic};
use gplab::soliton::{conserved_closed, Soliton};
use proptest::prelude::*;

const HALF_LENGTH: f64 = 10.0;
const POINTS: usize = 128;

fn grid() -> Grid {
    Grid::new(HALF_LENGTH, POINTS).expect("valid test grid")
}

/// A short sum of harmonics `a cos(m k1 x + phi)`. With `m <= max_mode`
/// well below the Nyquist index the field is exactly representable, so
/// spectral identities hold to rounding.
fn harmonic_field(max_mode: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((1..=max_mode, -1.0..1.0f64, 0.0..TAU), 1..6).prop_map(|modes| {
        let g = grid();
        let k1 = g.k_fundamental();
        g.nodes()
            .iter()
            .map(|&x| {
                modes
                    .iter()
                    .map(|&(m, a, phi)| a * (m as f64 * k1 * x + phi).cos())
                    .sum()
            })
            .collect()
    })
}

fn smooth_field() -> impl Strategy<Value = Vec<f64>> {
    harmonic_field(20)
}

fn pair_field() -> impl Strategy<Value = PairField> {
    (smooth_field(), smooth_field())
        .prop_map(|(first, second)| PairField::new(first, second).expect("equal lengths"))
}

fn sup(f: &[f64]) -> f64 {
    f.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn max_diff(f: &[f64], g: &[f64]) -> f64 {
    f.iter().zip(g).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

proptest! {
    /// The quadrature norm equals the coefficient norm (Parseval for the
    /// unnormalised transform: `dx Σ f² = (dx/n) Σ |f̂|²`).
    #[test]
    fn quadrature_norm_matches_coefficient_norm(f in harmonic_field(60)) {
        let g = grid();
        let physical = g.inner(&f, &f);
        let spectral = g.to_spectral(&f).iter().map(|c| c.norm_sqr()).sum::<f64>()
            * g.dx() / POINTS as f64;
        prop_assert!(
            (physical - spectral).abs() <= 1e-11 * (1.0 + physical),
            "physical {physical}, spectral {spectral}"
        );
    }

    /// The spectral derivative is skew-adjoint for the grid inner product.
    #[test]
    fn first_derivative_is_skew_adjoint(f in smooth_field(), h in smooth_field()) {
        let g = grid();
        let a = g.inner(&g.dx1(&f), &h);
        let b = g.inner(&f, &g.dx1(&h));
        prop_assert!(
            (a + b).abs() <= 1e-10 * (1.0 + a.abs().max(b.abs())),
            "<f',h> = {a}, <f,h'> = {b}"
        );
    }

    /// Composing two first derivatives reproduces the second derivative
    /// on fields below the band limit.
    #[test]
    fn derivative_composition_matches_second_derivative(f in smooth_field()) {
        let g = grid();
        let twice = g.dx1(&g.dx1(&f));
        let once = g.dx2(&f);
        prop_assert!(max_diff(&twice, &once) <= 1e-9 * (1.0 + sup(&once)));
    }

    /// Spectral translation is exact on band-limited fields: additive in
    /// the shift, identity at zero, and periodic in the box length.
    #[test]
    fn translation_is_additive_and_periodic(
        f in smooth_field(),
        s1 in -15.0..15.0f64,
        s2 in -15.0..15.0f64,
    ) {
        let g = grid();
        let scale = 1.0 + sup(&f);
        let joint = g.translate(&f, s1 + s2);
        let staged = g.translate(&g.translate(&f, s1), s2);
        prop_assert!(max_diff(&joint, &staged) <= 1e-10 * scale);
        prop_assert!(max_diff(&g.translate(&f, 0.0), &f) <= 1e-12 * scale);
        let full_period = g.translate(&f, 2.0 * HALF_LENGTH);
        prop_assert!(max_diff(&full_period, &f) <= 1e-10 * scale);
    }

    /// The zero-mean antiderivative is a right inverse of the derivative
    /// on the mean-free part of the field.
    #[test]
    fn antiderivative_inverts_the_derivative(f in smooth_field()) {
        let g = grid();
        let anti = g.antiderivative_zero_mean(&f);
        let mean = g.mean(&f);
        let centered: Vec<f64> = f.iter().map(|x| x - mean).collect();
        let scale = 1.0 + sup(&f);
        prop_assert!(g.mean(&anti).abs() <= 1e-12 * scale);
        prop_assert!(max_diff(&g.dx1(&anti), &centered) <= 1e-10 * scale);
    }

    /// Dealiasing is an orthogonal projection: idempotent, norm
    /// non-increasing, mean preserving, and with a residual orthogonal to
    /// the retained part.
    #[test]
    fn low_pass_is_an_orthogonal_projection(f in harmonic_field(60)) {
        let g = grid();
        let lp = g.low_pass(&f);
        let norm_sq = g.inner(&f, &f);
        prop_assert!(max_diff(&g.low_pass(&lp), &lp) <= 1e-12 * (1.0 + sup(&f)));
        prop_assert!(g.inner(&lp, &lp) <= norm_sq * (1.0 + 1e-12) + 1e-12);
        prop_assert!(
            (g.quadrature(&lp) - g.quadrature(&f)).abs() <= 1e-10 * (1.0 + g.quadrature(&f).abs())
        );
        let residual: Vec<f64> = f.iter().zip(&lp).map(|(a, b)| a - b).collect();
        prop_assert!(g.inner(&lp, &residual).abs() <= 1e-10 * (1.0 + norm_sq));
    }

    /// The windowed energy norm grows with the window and never exceeds
    /// the full norm.
    #[test]
    fn windowed_norm_is_monotone_and_dominated(
        u in pair_field(),
        center in -10.0..10.0f64,
        h1 in 0.5..9.0f64,
        h2 in 0.5..9.0f64,
    ) {
        let g = grid();
        let (lo, hi) = if h1 <= h2 { (h1, h2) } else { (h2, h1) };
        let narrow = g.norm_x_window(&u, center, lo);
        let wide = g.norm_x_window(&u, center, hi);
        let full = g.norm_x(&u);
        prop_assert!(narrow <= wide + 1e-12);
        prop_assert!(wide <= full * (1.0 + 1e-12) + 1e-12);
    }

    /// Component swap is an involution; the symplectic operator is
    /// skew-adjoint and squares to four times the second derivative.
    #[test]
    fn symplectic_operator_algebra_holds(u in pair_field(), w in pair_field()) {
        let g = grid();
        prop_assert_eq!(swap(&swap(&u)).first, u.first.clone());
        prop_assert_eq!(swap(&swap(&u)).second, u.second.clone());

        let ju = symplectic(&g, &u).unwrap();
        let jw = symplectic(&g, &w).unwrap();
        let a = g.inner_l2(&ju, &w).unwrap();
        let b = g.inner_l2(&u, &jw).unwrap();
        prop_assert!(
            (a + b).abs() <= 1e-10 * (1.0 + a.abs().max(b.abs())),
            "<Ju,w> = {a}, <u,Jw> = {b}"
        );

        let jju = symplectic(&g, &ju).unwrap();
        let scale = 1.0 + sup(&u.first).max(sup(&u.second));
        let dd1: Vec<f64> = g.dx2(&u.first).iter().map(|x| 4.0 * x).collect();
        let dd2: Vec<f64> = g.dx2(&u.second).iter().map(|x| 4.0 * x).collect();
        prop_assert!(max_diff(&jju.first, &dd1) <= 1e-8 * scale);
        prop_assert!(max_diff(&jju.second, &dd2) <= 1e-8 * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The discrete pairing of the profile with the swapped speed
    /// derivative of the family reproduces the closed form `-2 sqrt(2-c²)`
    /// across the speed window. The quadrature error is set by the
    /// integrand's complex poles (nearest at distance ~0.42 for c = 0.4),
    /// so the step must be fine enough for `exp(-2π·0.42/dx)` to vanish.
    #[test]
    fn family_pairing_matches_its_closed_form(c in 0.4..1.25f64) {
        let g = Grid::new(40.0, 1024).unwrap();
        let s = Soliton::new(c, 0.0).unwrap();
        let pairing = family_pairing(&g, &s);
        let closed = -2.0 * (2.0 - c * c).sqrt();
        prop_assert!(
            (pairing - closed).abs() <= 1e-7,
            "pairing {pairing}, closed form {closed}"
        );
    }

    /// The closed momentum slope agrees with a central difference of the
    /// closed momentum.
    #[test]
    fn momentum_slope_matches_a_finite_difference(c in 0.1..1.35f64) {
        let h = 1e-5;
        let plus = conserved_closed(c + h).unwrap().momentum;
        let minus = conserved_closed(c - h).unwrap().momentum;
        let fd = (plus - minus) / (2.0 * h);
        let slope = conserved_closed(c).unwrap().momentum_slope;
        prop_assert!((fd - slope).abs() <= 1e-7 * (1.0 + slope.abs()));
    }

    /// The smooth step weight is a unit-range increasing switch whose
    /// closed-form derivatives match five-point finite differences.
    #[test]
    fn weight_derivatives_match_finite_differences(
        nu in 0.05..0.5f64,
        x in -30.0..30.0f64,
    ) {
        let w = Weight { nu };
        prop_assert!(w.value(x) > 0.0 && w.value(x) < 1.0);
        prop_assert!((w.value(x) + w.value(-x) - 1.0).abs() <= 1e-14);
        prop_assert!(w.d1(x) > 0.0);

        let h = 0.05;
        let five_point = |f: &dyn Fn(f64) -> f64| {
            (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
        };
        let checks = [
            (five_point(&|y| w.value(y)), w.d1(x)),
            (five_point(&|y| w.d1(y)), w.d2(x)),
            (five_point(&|y| w.d2(y)), w.d3(x)),
            (five_point(&|y| w.d3(y)), w.d4(x)),
        ];
        for (fd, exact) in checks {
            prop_assert!(
                (fd - exact).abs() <= 1e-5 * (1.0 + exact.abs()),
                "finite difference {fd}, closed form {exact}"
            );
        }
    }

    /// For a rightward soliton the momentum density is non-negative, so
    /// the localized momentum decreases in the offset and is bounded by
    /// the total momentum.
    #[test]
    fn localized_momentum_is_monotone_in_the_offset(
        c in 0.25..1.3f64,
        a in -10.0..10.0f64,
        r1 in -15.0..15.0f64,
        r2 in -15.0..15.0f64,
    ) {
        let g = Grid::new(60.0, 512).unwrap();
        let s = Soliton::new(c, a).unwrap();
        let prof = s.eval_hydro(&g);
        let total = 0.5 * g.inner(&prof.eta, &prof.v);
        let state = HydroState::new(prof.eta, prof.v, 0.0).unwrap();
        let nu = Weight::for_speed(c).unwrap().nu;

        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let near = localized_momentum(&g, &state, a, lo, nu).unwrap();
        let far = localized_momentum(&g, &state, a, hi, nu).unwrap();
        prop_assert!(near >= far - 1e-12);
        prop_assert!(far >= -1e-12);
        prop_assert!(near <= total * (1.0 + 1e-12) + 1e-12);
    }

    /// The run-configuration hash ignores the output directory but is
    /// sensitive to the physics fields.
    #[test]
    fn config_hash_ignores_outdir_and_tracks_physics(
        c in 0.3..1.3f64,
        amplitude in 0.001..0.1f64,
        seed in any::<u64>(),
    ) {
        let make = |seed: u64, outdir: &str| {
            let text = format!(
                r#"{{"speed": {c}, "perturbation": {{"kind": "random_localized",
                    "amplitude": {amplitude}, "seed": {seed}}}{outdir}}}"#
            );
            RunConfig::from_json_str(&text).unwrap()
        };
        let base = run_config_hash(&make(seed, "")).unwrap();
        prop_assert_eq!(base.len(), 16);
        prop_assert!(base.chars().all(|ch| ch.is_ascii_hexdigit()));

        let with_dir = run_config_hash(&make(seed, r#", "outdir": "/tmp/somewhere""#)).unwrap();
        prop_assert_eq!(&base, &with_dir);

        let reseeded = run_config_hash(&make(seed.wrapping_add(1), "")).unwrap();
        prop_assert_ne!(&base, &reseeded);
    }
}
