use nalgebra::DMatrix;
use radial_entanglement::entanglement::PartialWave;
use radial_entanglement::*;

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[test]
fn degeneracy_closed_forms() {
    for l in 0..200usize {
        let lf = l as f64;
        assert_eq!(degeneracy(l, 2.0).unwrap(), if l == 0 { 1.0 } else { 2.0 });
        assert_eq!(degeneracy(l, 3.0).unwrap(), 2.0 * lf + 1.0);
        assert_eq!(degeneracy(l, 4.0).unwrap(), (lf + 1.0).powi(2));
        let five = (lf + 1.0) * (lf + 2.0) * (2.0 * lf + 3.0) / 6.0;
        assert_eq!(degeneracy(l, 5.0).unwrap(), five);
        let d = 7u64;
        let l64 = l as u64;
        let expect = binomial(l64 + d - 1, l64)
            - if l >= 2 {
                binomial(l64 + d - 3, l64 - 2)
            } else {
                0.0
            };
        assert!((degeneracy(l, 7.0).unwrap() - expect).abs() <= 1e-12 * expect);
    }
}

#[test]
fn fractional_degeneracy_by_recurrence() {
    // Γ(l + D − 2)/Γ(l + 1) obeys r(l + 1) = r(l) (l + D − 2)/(l + 1).
    for &d in &[1.2, 2.5, 3.5, 4.7] {
        let g = statrs::function::gamma::gamma(d - 1.0);
        let mut r = g;
        for l in 1..3000usize {
            let lf = l as f64;
            if l > 1 {
                r *= (lf + d - 3.0) / lf;
            }
            let expect = (2.0 * lf + d - 2.0) * r / g;
            let got = degeneracy(l, d).unwrap();
            assert!(
                (got - expect).abs() <= 1e-11 * expect.abs(),
                "D={d} l={l}: {got} vs {expect}"
            );
        }
    }
}

#[test]
fn coupling_matrix_entries() {
    let p = ModelParams::new(2.5, 0.3, 8);
    let k = build_coupling_matrix(&p, 4);
    for j in 1..=8usize {
        let jf = j as f64;
        let mut expect = 4.0 * (4.0 + 0.5) / (jf * jf) + 0.09 + (1.0 + 0.5 / jf).powf(1.5);
        if j > 1 {
            expect += (1.0 - 0.5 / jf).powf(1.5);
        }
        assert!((k.get(j - 1, j - 1) - expect).abs() < 1e-14);
        if j < 8 {
            let c = -((jf + 0.5).powi(2) / (jf * (jf + 1.0))).powf(0.75);
            assert!((k.get(j - 1, j) - c).abs() < 1e-14);
            assert_eq!(k.get(j - 1, j), k.get(j, j - 1));
        }
    }
    assert_eq!(k.get(0, 2), 0.0);
}

/// Square root by the Denman–Beavers iteration, independent of any
/// eigendecomposition.
fn denman_beavers(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = DMatrix::<f64>::identity(n, n);
    for _ in 0..100 {
        let yi = y.clone().try_inverse().unwrap();
        let zi = z.clone().try_inverse().unwrap();
        let y_next = (&y + zi) * 0.5;
        let z_next = (&z + yi) * 0.5;
        let change = (&y_next - &y).norm() / y_next.norm();
        y = y_next;
        z = z_next;
        if change < 1e-15 {
            break;
        }
    }
    y
}

/// ξ of the exterior through explicit inverses.
fn brute_xi(omega: &DMatrix<f64>, n: usize) -> Vec<f64> {
    let size = omega.nrows();
    let a = omega.view((0, 0), (n, n)).into_owned();
    let b = omega.view((0, n), (n, size - n)).into_owned();
    let c = omega.view((n, n), (size - n, size - n)).into_owned();
    let beta = b.transpose() * a.try_inverse().unwrap() * &b * 0.5;
    let gamma = &c - &beta;
    let g_inv_sqrt = denman_beavers(&gamma).try_inverse().unwrap();
    let bp = &g_inv_sqrt * &beta * &g_inv_sqrt;
    let bp = (&bp + bp.transpose()) * 0.5;
    let mut xi: Vec<f64> = bp
        .symmetric_eigenvalues()
        .iter()
        .map(|&b| b / (1.0 + (1.0 - b * b).max(0.0).sqrt()))
        .collect();
    xi.sort_by(|x, y| y.total_cmp(x));
    xi
}

fn brute_entropy(xi: &[f64]) -> f64 {
    xi.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -(1.0 - x).ln() - x / (1.0 - x) * x.ln())
        .sum()
}

#[test]
fn dual_path_spectra_and_entropy() {
    let params = ModelParams::new(3.0, 0.0, 60);
    let n = 30;
    let part = Partition::new(n, 60).unwrap();
    let l_switch = 40;
    let cfg = EntanglementConfig {
        l_switch: LSwitch::Fixed(l_switch),
        ..Default::default()
    };
    let res = total_entanglement(&params, part, &cfg).unwrap();
    let mut brute_total = 0.0;
    let mut lib_total = 0.0;
    for l in 0..l_switch {
        let k = build_coupling_matrix(&params, l).to_dense();
        let omega = denman_beavers(&k);
        let brute = brute_xi(&omega, n);
        if l % 13 == 0 {
            let lib = reduce_mode(&reduction::ModeOmega::new(&params, l).unwrap(), part).unwrap();
            for (x, y) in lib.xi.iter().zip(&brute) {
                assert!((x - y).abs() <= 1e-8, "l={l}: {x} vs {y}");
            }
        }
        let PartialWave { s, nu, .. } = res.per_l[l];
        assert_eq!(nu, 2.0 * l as f64 + 1.0);
        brute_total += nu * brute_entropy(&brute);
        lib_total += nu * s;
    }
    assert!(
        ((lib_total - brute_total) / brute_total).abs() <= 1e-6,
        "{lib_total} vs {brute_total}"
    );
}

#[test]
fn zeta_values_by_direct_summation() {
    // ζ(3) and ζ'(2) with Euler–Maclaurin corrected partial sums.
    let m = 20000.0f64;
    let mut z3 = 0.0;
    let mut dz2 = 0.0;
    for k in (1..20000).rev() {
        let kf = k as f64;
        z3 += kf.powi(-3);
        dz2 -= kf.ln() / (kf * kf);
    }
    z3 += 1.0 / (2.0 * m * m) + 0.5 * m.powi(-3) + 0.25 * m.powi(-4);
    dz2 -= (m.ln() + 1.0) / m + 0.5 * m.ln() / (m * m) + (2.0 * m.ln() - 1.0) / (12.0 * m.powi(3));
    assert!((riemann_zeta(3.0).unwrap() - z3).abs() < 1e-12);
    assert!((riemann_zeta(3.0).unwrap() - 1.2020569032).abs() < 1e-10);
    assert!((riemann_zeta_prime(2.0).unwrap() - dz2).abs() < 1e-10);
    assert!((riemann_zeta_prime(2.0).unwrap() + 0.9375482543).abs() < 1e-10);
}

#[test]
fn direct_tail_matches_exact_partial_waves() {
    let params = ModelParams::new(3.0, 0.0, 10);
    let n = 5;
    let part = Partition::new(n, 10).unwrap();
    let (mut s, mut e) = (0.0, 0.0);
    for l in (1000..10000).step_by(500) {
        let xi = reduce_mode(&reduction::ModeOmega::new(&params, l).unwrap(), part).unwrap();
        let (sl, el) = entanglement::spectrum_sums(&xi.xi).unwrap();
        let (ps, pe) =
            perturbative::tail_term(&params, l, n, perturbative::EdgePolicy::Reject).unwrap();
        let nu = 2.0 * l as f64 + 1.0;
        assert!((ps - nu * sl).abs() <= 1e-3 * nu * sl, "l={l}");
        assert!((pe - nu * el).abs() <= 1e-3 * nu * el, "l={l}");
        s += nu * sl;
        e += nu * el;
    }
    assert!(s > 0.0 && e > 0.0);
    let (range_s, _) = perturbative::tail_range(&params, n, 1000, 9999).unwrap();
    let b = tail_direct(&params, n, 1000, 1e-10).unwrap();
    let c = tail_direct(&params, n, 10000, 1e-10).unwrap();
    assert!(((b.delta_s - c.delta_s) - range_s).abs() <= 1e-3 * range_s);
}

#[test]
fn tail_methods_agree_across_dimensions() {
    for &d in &[2.0, 2.5, 3.0, 4.0, 4.5] {
        let params = ModelParams::new(d, 0.0, 10);
        let direct = tail_direct(&params, 5, 200, 1e-7).unwrap();
        let zeta = tail_zeta(&params, 5, 200, 5).unwrap();
        let rel = ((direct.delta_s - zeta.delta_s) / direct.delta_s).abs();
        assert!(
            rel <= 1e-3,
            "D={d}: {} vs {} ({rel:.2e})",
            direct.delta_s,
            zeta.delta_s
        );
        let rel = ((direct.delta_e1 - zeta.delta_e1) / direct.delta_e1).abs();
        assert!(rel <= 1e-3, "D={d}: E1 {rel:.2e}");
    }
}

#[test]
fn massless_limit_is_continuous() {
    let p = ModelParams::new(3.0, 0.0, 20);
    let part = Partition::new(8, 20).unwrap();
    let cfg = EntanglementConfig::default();
    let a = total_entanglement(&p, part, &cfg).unwrap();
    let b = total_entanglement(&p.with_mass(1e-6), part, &cfg).unwrap();
    assert!((a.S - b.S).abs() < 1e-6 * a.S);
}

#[test]
fn massive_entropy_never_exceeds_massless() {
    let p = ModelParams::new(3.0, 0.0, 20);
    let cfg = EntanglementConfig::default();
    let parts: Vec<Partition> = (2..=10).map(|n| Partition::new(n, 20).unwrap()).collect();
    let uv = total_entanglement_many(&p, &parts, &cfg, &ExactModes::new()).unwrap();
    for mass in [0.1, 0.5, 2.0] {
        let ir =
            total_entanglement_many(&p.with_mass(mass), &parts, &cfg, &ExactModes::new()).unwrap();
        for (a, b) in uv.iter().zip(&ir) {
            assert!(b.S <= a.S && b.E1 <= a.E1);
        }
    }
}

#[test]
fn perturbative_error_falls_along_geometric_grid() {
    let params = ModelParams::new(3.0, 0.0, 8);
    let part = Partition::new(4, 8).unwrap();
    let mut previous = f64::INFINITY;
    for l in [50usize, 100, 200, 400, 800, 1600] {
        let exact = reduce_mode(&reduction::ModeOmega::new(&params, l).unwrap(), part)
            .unwrap()
            .largest();
        let err = ((perturbative_xi(&params, l, 4).unwrap() - exact) / exact).abs();
        assert!(
            err < previous || err < 1e-13,
            "l = {l}: {err:e} after {previous:e}"
        );
        previous = err;
        if l >= 800 {
            assert!(err <= 1e-3);
        }
    }
}

#[test]
fn tail_terms_decay_with_dimension_exponent() {
    for &d in &[2.0, 3.0, 4.0] {
        let params = ModelParams::new(d, 0.0, 10);
        let edge = perturbative::EdgePolicy::Reject;
        // The single-copy term is ν ξ to leading order, with no log factor.
        let (_, a) = perturbative::tail_term(&params, 10_000, 5, edge).unwrap();
        let (_, b) = perturbative::tail_term(&params, 100_000, 5, edge).unwrap();
        let exponent = (b / a).ln() / 10f64.ln();
        assert!((exponent - (d - 6.0)).abs() <= 0.01, "D = {d}: {exponent}");
    }
}
