//! Values derived by hand from the reference presets, frozen independently
//! of the implementation.

use bigjump_core::asymptotics::closed_form_for;
use bigjump_core::presets;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs()
}

#[test]
fn drift_weight_moments() {
    // W = exp(-0.1 T), T ~ Exp(1): E[W^k] = 10 / (10 + k).
    let b = presets::theorem31_bundle();
    for k in [0.5, 1.0, 1.5, 2.0, 3.0] {
        assert!(close(b.weight_moment(k).unwrap(), 10.0 / (10.0 + k), 1e-12), "k = {k}");
    }
}

#[test]
fn weak_dependence_closed_form_constant() {
    // mu(A) E[q] = 0.625 / 1.1, T_h = 1.1 / 1.3, 1 / (1 - E[W^2]) = 6.
    let c = closed_form_for(&presets::theorem31_bundle(), &presets::reference_set()).unwrap().unwrap();
    let k = 0.625 / 1.1 * (1.1 / 1.3) * 6.0;
    assert!(close(c.evaluate(1.0).unwrap(), k, 1e-12));
    assert!(close(c.evaluate(53.7).unwrap(), k / (53.7 * 53.7), 1e-12));
    assert!(close(k, 2.884_615_384_615_384_6, 1e-15));
}

#[test]
fn comonotone_closed_form_constant() {
    // Index 1, mu(A) = 1 on the diagonal atom, Ḡ*(x) = 0.2/x,
    // 1 / (1 - E[W]) = 1 / 0.6: P(D > x) ~ 1/(3x).
    let bundle = presets::comonotone_bundle();
    let c = closed_form_for(&bundle, &presets::reference_set()).unwrap().unwrap();
    assert!(close(c.evaluate(2000.0).unwrap(), 1.0 / 6000.0, 1e-12));
    assert!(close(bundle.weight_moment(1.0).unwrap(), 0.4, 1e-12));
    assert!(close(bundle.weight_moment(1.5).unwrap(), 0.357_770_876, 1e-8));
}
