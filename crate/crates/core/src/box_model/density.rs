use super::geometry::{BoxGeometry, GasState, ModeIndex};
use super::split::{self, Lattice, LowModeBox, Weight};
use crate::numerics::{theta, CompensatedSum, SeriesResult, Tolerance};
use serde::{Deserialize, Serialize};

/// Accuracy requested from the split evaluator; the geometric tail makes
/// near-machine precision cheap.
const SPLIT_TOL: Tolerance = Tolerance {
    abs: 0.0,
    rel: 1e-15,
};

/// Term cap for the plain cycle expansion; when hit, the reported tail bound
/// stays honest but wide.
const CYCLE_TERM_CAP: u64 = 50_000_000;

pub(crate) fn lattice(geom: &BoxGeometry, lambda: f64) -> Lattice {
    Lattice {
        stiffness: geom.stiffness(lambda),
        volume: geom.volume(),
    }
}

/// `βε(k) = πλ² Σ_ν (n_ν / L_ν)²`.
pub fn mode_energy_beta(geom: &BoxGeometry, lambda: f64, n: ModeIndex) -> f64 {
    let a = geom.stiffness(lambda);
    (0..3).map(|i| a[i] * (n.0[i] * n.0[i]) as f64).sum()
}

/// Density of particles in mode `k`: `(1/V) / (e^{βε(k) - βμ} - 1)`.
pub fn mode_density(state: &GasState, geom: &BoxGeometry, n: ModeIndex) -> f64 {
    let x = mode_energy_beta(geom, state.lambda(), n) - state.beta_mu();
    1.0 / (geom.volume() * x.exp_m1())
}

/// Per-mode densities over the box `|n_ν| ≤ N_ν`, with a bound on
/// everything outside it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OccupationSpectrum {
    /// Modes sorted by decreasing density.
    pub modes: Vec<(ModeIndex, f64)>,
    pub volume: f64,
    pub half_widths: [u64; 3],
    /// Upper bound on the density carried by modes outside the box.
    pub tail_bound: f64,
}

impl OccupationSpectrum {
    pub fn listed_density(&self) -> f64 {
        self.modes.iter().map(|m| m.1).sum()
    }
}

/// Enumerate every mode with `|n_ν| ≤ half_widths[ν]`.
pub fn occupation_spectrum(
    state: &GasState,
    geom: &BoxGeometry,
    half_widths: [u64; 3],
) -> OccupationSpectrum {
    let [n1, n2, n3] = half_widths.map(|n| n as i64);
    let mut modes = Vec::with_capacity(((2 * n1 + 1) * (2 * n2 + 1) * (2 * n3 + 1)) as usize);
    for i in -n1..=n1 {
        for k in -n2..=n2 {
            for l in -n3..=n3 {
                let m = ModeIndex::new(i, k, l);
                modes.push((m, mode_density(state, geom, m)));
            }
        }
    }
    modes.sort_by(|a, b| b.1.total_cmp(&a.1));
    let lat = lattice(geom, state.lambda());
    let low = LowModeBox::new(lat.stiffness, half_widths);
    let rest = split::cycle_sum(
        &lat,
        state.beta_mu(),
        [0.0; 3],
        Weight::Density,
        Some(&low),
        1,
        u64::MAX,
        SPLIT_TOL,
        u64::MAX,
    );
    OccupationSpectrum {
        modes,
        volume: geom.volume(),
        half_widths,
        tail_bound: rest.value + rest.tail_bound,
    }
}

pub(crate) fn split_sum(
    state: &GasState,
    geom: &BoxGeometry,
    phases: [f64; 3],
    weight: Weight,
) -> SeriesResult {
    let lat = lattice(geom, state.lambda());
    let low = LowModeBox::choose(lat.stiffness, state.beta_mu());
    let head = split::low_mode_sum(&lat, state.beta_mu(), phases, weight, &low, None);
    let rest = split::cycle_sum(
        &lat,
        state.beta_mu(),
        phases,
        weight,
        Some(&low),
        1,
        u64::MAX,
        SPLIT_TOL,
        u64::MAX,
    );
    let rounding = 4.0 * f64::EPSILON * head.abs();
    SeriesResult::new(head + rest.value, rest.tail_bound + rounding, rest.terms_used)
}

/// Total density `ρ_Λ(β, μ) = Σ_k ρ_Λ(k)`.
///
/// Low modes are summed with their exact Bose factors and the rest through
/// the cycle expansion, so the cost stays bounded as `βμ → 0⁻`.
pub fn total_density(state: &GasState, geom: &BoxGeometry) -> SeriesResult {
    split_sum(state, geom, [0.0; 3], Weight::Density)
}

/// `∂ρ_Λ/∂(βμ) = Σ_k (1/V) e^{x_k}/(e^{x_k} - 1)²`, a positive lattice sum.
pub fn density_slope(state: &GasState, geom: &BoxGeometry) -> SeriesResult {
    split_sum(state, geom, [0.0; 3], Weight::Slope)
}

/// `βp_Λ = (1/V) Σ_j j^{-1} e^{jβμ} Π_ν θ₃(0, e^{-j a_ν})`.
pub fn pressure(state: &GasState, geom: &BoxGeometry) -> SeriesResult {
    split_sum(state, geom, [0.0; 3], Weight::Pressure)
}

/// The plain cycle expansion `(1/V) Σ_j e^{jβμ} Π_ν θ₃(0, e^{-j a_ν})`.
///
/// Needs about `1/|βμ|` terms; prefer [`total_density`] near condensation.
pub fn total_density_cycles(state: &GasState, geom: &BoxGeometry) -> SeriesResult {
    let lat = lattice(geom, state.lambda());
    split::cycle_sum(
        &lat,
        state.beta_mu(),
        [0.0; 3],
        Weight::Density,
        None,
        1,
        u64::MAX,
        Tolerance::new(0.0, 1e-14),
        CYCLE_TERM_CAP,
    )
}

/// Direct lattice sum over the ellipsoid `βε(k) ≤ E_cut`.
///
/// With `τ ∈ (0, 1)`, every omitted mode obeys `e^{-βε} ≤ e^{-(1-τ)E_cut} e^{-τβε}`,
/// so the tail is at most `e^{βμ - (1-τ)E_cut} Π_ν θ₃(0, e^{-τ a_ν}) / (V(1 - e^{-E_cut}))`.
pub fn total_density_direct(state: &GasState, geom: &BoxGeometry) -> SeriesResult {
    mode_sum(state, geom, [0.0; 3], Tolerance::new(0.0, 1e-14))
}

const TAIL_SPLIT: f64 = 1.0 / 3.0;

/// `(1/V) Σ_k cos(2 n·u) / (e^{βε_k - βμ} - 1)` summed over an ellipsoid.
pub(crate) fn mode_sum(
    state: &GasState,
    geom: &BoxGeometry,
    phases: [f64; 3],
    tol: Tolerance,
) -> SeriesResult {
    let lat = lattice(geom, state.lambda());
    let beta_mu = state.beta_mu();
    let v = lat.volume;
    let theta_tau: f64 = lat
        .stiffness
        .iter()
        .map(|&a| theta::direct_or_dual(0.0, TAIL_SPLIT * a))
        .product();
    // Lower estimate of the (zero-phase) sum: the first cycle term.
    let scale: f64 = lat
        .stiffness
        .iter()
        .map(|&a| theta::direct_or_dual(0.0, a))
        .product::<f64>()
        * beta_mu.exp()
        / v;
    let target = tol.target(scale).max(f64::MIN_POSITIVE);
    let prefactor = beta_mu.exp() * theta_tau / (v * (1.0 - (-1.0f64).exp()));
    let e_cut = ((prefactor / target).ln() / (1.0 - TAIL_SPLIT)).max(1.0);
    let tail = prefactor * (-(1.0 - TAIL_SPLIT) * e_cut).exp();

    let [a1, a2, a3] = lat.stiffness;
    let reach = |a: f64, e: f64| (e.max(0.0) / a).sqrt().floor() as i64;
    let cos = |u: f64, n: i64| if u == 0.0 { 1.0 } else { (2.0 * n as f64 * u).cos() };
    let mut sum = CompensatedSum::default();
    let mut abs_sum = 0.0;
    let mut count = 0u64;
    for i in 0..=reach(a1, e_cut) {
        let e1 = a1 * (i * i) as f64;
        let w1 = if i == 0 { 1.0 } else { 2.0 } * cos(phases[0], i);
        for k in 0..=reach(a2, e_cut - e1) {
            let e2 = e1 + a2 * (k * k) as f64;
            let w2 = w1 * if k == 0 { 1.0 } else { 2.0 } * cos(phases[1], k);
            let mut row = 0.0;
            let mut row_abs = 0.0;
            for l in (0..=reach(a3, e_cut - e2)).rev() {
                let e3 = e2 + a3 * (l * l) as f64;
                let w3 = if l == 0 { 1.0 } else { 2.0 } * cos(phases[2], l);
                let f = 1.0 / (e3 - beta_mu).exp_m1();
                row += w3 * f;
                row_abs += w3.abs() * f;
                count += 1;
            }
            sum.add(w2 * row);
            abs_sum += w2.abs() * row_abs;
        }
    }
    let rounding = 8.0 * f64::EPSILON * abs_sum / v;
    SeriesResult::new(sum.value() / v, tail + rounding, count.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::box_model::geometry::Anisotropy;
    use crate::numerics::polylog;

    fn geom(alpha: [f64; 3], v: f64) -> BoxGeometry {
        BoxGeometry::new(Anisotropy::new(alpha).unwrap(), v).unwrap()
    }

    #[test]
    fn unit_mode_energy() {
        let g = geom([1.0 / 3.0; 3], 1.0);
        assert_eq!(mode_energy_beta(&g, 1.0, ModeIndex::ZERO), 0.0);
        let e = mode_energy_beta(&g, 1.0, ModeIndex::new(1, 0, 0));
        assert!((e - std::f64::consts::PI).abs() < 1e-14);
        assert_eq!(e, mode_energy_beta(&g, 1.0, ModeIndex::new(-1, 0, 0)));
    }

    #[test]
    fn zero_mode_density_by_hand() {
        let g = geom([0.4, 0.3, 0.3], 100.0);
        let s = GasState::new(1.0, -0.01).unwrap();
        let expected = (1.0 / 100.0) / (0.01f64.exp() - 1.0);
        // e^{0.01} - 1 by hand cancels about two digits.
        assert!((mode_density(&s, &g, ModeIndex::ZERO) / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_mode_near_condensation_is_inverse_constant() {
        let v = 1e8;
        let g = geom([0.4, 0.3, 0.3], v);
        let s = GasState::new(1.0, -2.0 / v).unwrap();
        assert!((mode_density(&s, &g, ModeIndex::ZERO) - 0.5).abs() < 1e-7);
    }

    #[test]
    fn direct_and_cycle_forms_agree() {
        let g = geom([0.5, 0.25, 0.25], 1e3);
        let s = GasState::new(1.0, -0.05).unwrap();
        let d = total_density_direct(&s, &g);
        let c = total_density_cycles(&s, &g);
        let h = total_density(&s, &g);
        assert!((d.value - c.value).abs() <= 1e-10 * c.value, "{} vs {}", d.value, c.value);
        assert!((h.value - c.value).abs() <= 1e-12 * c.value);
    }

    #[test]
    fn dilute_limit_is_first_cycle() {
        let g = geom([0.4, 0.3, 0.3], 500.0);
        let s = GasState::new(1.0, -40.0).unwrap();
        let lat = lattice(&g, 1.0);
        let first: f64 = lat
            .stiffness
            .iter()
            .map(|&a| theta::direct_or_dual(0.0, a))
            .product::<f64>()
            * (-40.0f64).exp()
            / 500.0;
        assert!((total_density_cycles(&s, &g).value / first - 1.0).abs() < 1e-15);
    }

    #[test]
    fn large_volume_reaches_bulk_functions() {
        let g = geom([1.0 / 3.0; 3], 1e9);
        let s = GasState::new(1.0, -0.1).unwrap();
        let z = (-0.1f64).exp();
        let g32 = polylog(1.5, z).unwrap().value;
        let g52 = polylog(2.5, z).unwrap().value;
        assert!((total_density_cycles(&s, &g).value / g32 - 1.0).abs() < 1e-9);
        assert!((pressure(&s, &g).value / g52 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn occupation_spectrum_brackets_total() {
        let g = geom([0.6, 0.2, 0.2], 2e3);
        let s = GasState::new(1.0, -1e-3).unwrap();
        let spec = occupation_spectrum(&s, &g, [6, 2, 1]);
        let total = total_density_direct(&s, &g);
        let listed = spec.listed_density();
        assert!(spec.modes.iter().all(|m| m.1 > 0.0));
        assert!(listed <= total.value + total.tail_bound);
        assert!(listed + spec.tail_bound >= total.value - total.tail_bound);
        assert_eq!(spec.modes[0].0, ModeIndex::ZERO);
    }

    #[test]
    fn slope_matches_centered_difference() {
        let g = geom([0.6, 0.2, 0.2], 5e3);
        let s = GasState::new(1.0, -3e-3).unwrap();
        let h = 1e-7;
        let up = total_density(&GasState::new(1.0, -3e-3 + h).unwrap(), &g).value;
        let down = total_density(&GasState::new(1.0, -3e-3 - h).unwrap(), &g).value;
        let fd = (up - down) / (2.0 * h);
        assert!((density_slope(&s, &g).value / fd - 1.0).abs() < 1e-6);
    }
}
