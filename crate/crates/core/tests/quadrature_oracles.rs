//! Quadrature values against 30-digit references (`tools/oracles.py`).

use bsg_core::cumulants::{
    cumulant_curve, cumulant_quadrature, moment_quadrature, GradedRule, Method, Quadrature,
};
use bsg_core::field::KernelFamily;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn kernel_closed_form() {
    let f = KernelFamily::default();
    for (t, r, want) in [
        (10.0, 0.1, 2.363_047_729_292_221_5),
        (3.0, 0.5, 0.811_712_820_292_084_4),
        (1.0, 0.01, 0.999_840_290_345_551_4),
        (6.0, 0.002, 5.849_588_278_017_724_6),
    ] {
        let k = f.k_of_distance(t, r);
        assert!(rel(k, want) < 1e-12, "K_{t}({r}) = {k}, want {want}");
    }
}

#[test]
fn second_moment_reference() {
    let f = KernelFamily::default();
    let m2 = moment_quadrature(&f, 0.8, 3.0, 2, &Quadrature::default()).unwrap();
    assert!(rel(m2, 1.688_237_424_712_430_1) < 1e-8, "{m2}");
}

#[test]
fn second_cumulant_references() {
    let f = KernelFamily::default();
    let q = Quadrature::default();
    for (b2, t, want) in [
        (1.2f64, 5.0, 9.288_609_240_833_008),
        (1.2, 7.0, 17.528_526_231_273_08),
        (0.8, 7.0, 2.496_275_143_597_079_6),
        (0.8, 8.0, 2.691_547_622_826_875_8),
        (0.8, 3.0, 1.192_270_709_600_383_2),
        (0.5, 2.0, 0.252_206_788_932_029_1),
    ] {
        let c2 = cumulant_quadrature(&f, b2.sqrt(), t, 2, &q).unwrap();
        assert!(rel(c2, want) < 1e-8, "C2(b2={b2}, t={t}) = {c2}, want {want}");
    }
}

#[test]
fn upper_half_growth_fit_matches_reference_slope() {
    let f = KernelFamily::default();
    let t_list = [4.0, 5.0, 6.0, 7.0, 8.0];
    let rep = cumulant_curve(&f, 1.5f64.sqrt(), &t_list, 2, &Quadrature::default()).unwrap();
    let fit = rep.growth.iter().find(|g| g.order == 2).unwrap();
    // OLS over t = 6, 7, 8 of the reference C2 values
    let want = (156.564_475_869_996_83f64.ln() - 54.417_251_259_233_985f64.ln()) / 2.0;
    assert!((fit.slope - want).abs() < 1e-7, "{} vs {want}", fit.slope);
    assert_eq!((fit.t_lo, fit.t_hi), (6.0, 8.0));
    let c8 = rep.get(8.0, 2, Method::Quadrature).unwrap();
    assert!(c8.stderr < 1e-6 * c8.value);
}

#[test]
fn refined_rule_agrees_for_fourth_cumulant() {
    let f = KernelFamily::default();
    let fine = Quadrature::Graded(GradedRule {
        order: 12,
        ..GradedRule::default()
    });
    let a = cumulant_quadrature(&f, 1.2f64.sqrt(), 4.0, 4, &Quadrature::default()).unwrap();
    let b = cumulant_quadrature(&f, 1.2f64.sqrt(), 4.0, 4, &fine).unwrap();
    assert!(rel(a, b) < 1e-7, "{a} vs {b}");
}
