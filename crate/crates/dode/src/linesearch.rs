//! Step-rate selection along a descent direction: a bisection procedure for
//! the largest constraint-respecting step, a least-squares quadratic fit to
//! sampled responses, and the analytic minimizer of the fitted polynomial.

use crate::error::{Error, Result};
use crate::objective::clip_to_bounds;
use crate::par;
use crate::scenario::GenerationConstraints;
use crate::types::{Bounds, DemandVector};

pub const DEFAULT_ELL_DELTA: f64 = 1e8;
pub const DEFAULT_EPS1: f64 = 1e-8;
pub const DEFAULT_SAMPLES: usize = 2;

/// Below this the maximum step is treated as zero.
const ELL_FLOOR: f64 = 1e-12;

/// Guard against pathological directions that would make the advance loop
/// crawl; generously above the ~160 iterations of a typical run.
const MAX_STEP_ITERS: usize = 100_000;

#[derive(Debug, Clone)]
pub struct LineSearchResult {
    /// Largest feasible step rate.
    pub ell: f64,
    /// (alpha, response) pairs, starting with (0, F(x)).
    pub samples: Vec<(f64, f64)>,
    /// Fitted coefficients of beta0 + beta1*alpha + beta2*alpha^2.
    pub betas: (f64, f64, f64),
    /// Chosen step rate, in [0, ell].
    pub eta: f64,
}

fn candidate(x: &DemandVector, d: &[f64], alpha: f64, bounds: &Bounds) -> DemandVector {
    let stepped = DemandVector::new(
        x.values.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect(),
    );
    clip_to_bounds(&stepped, bounds)
}

/// True when every coordinate the direction can move sits at a bound, i.e.
/// growing the step changes nothing. Coordinates with a zero direction
/// entry are pinned by construction and are not required to bind.
fn fully_binding(x: &DemandVector, d: &[f64], bounds: &Bounds) -> bool {
    x.values
        .iter()
        .zip(d)
        .zip(bounds.lower.iter().zip(&bounds.upper))
        .all(|((&v, &di), (&l, &u))| di == 0.0 || v == l || v == u)
}

/// Largest step rate along `d` for which the clipped point stays within the
/// generation constraints and at least one movable coordinate is still off
/// its bound: advance by `ell_delta`, backtrack and halve on violation,
/// stop once the increment falls below `eps1`.
pub fn determine_max_step_rate(
    x: &DemandVector,
    bounds: &Bounds,
    d: &[f64],
    gen: &GenerationConstraints,
    ell_delta: f64,
    eps1: f64,
) -> Result<f64> {
    if d.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroDirection);
    }
    let mut ell = 0.0;
    let mut delta = ell_delta;
    for _ in 0..MAX_STEP_ITERS {
        ell += delta;
        let probe = candidate(x, d, ell, bounds);
        let violated = !gen.is_feasible(&probe.values) || fully_binding(&probe, d, bounds);
        if violated {
            ell -= delta;
            delta /= 2.0;
            if delta < eps1 {
                break;
            }
        }
    }
    Ok(ell)
}

/// Least-squares fit of y ~ beta0 + beta1*alpha + beta2*alpha^2. Exactly
/// three distinct sample points are interpolated exactly.
pub fn fit_quadratic(samples: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    let mut alphas: Vec<f64> = samples.iter().map(|(a, _)| *a).collect();
    alphas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    alphas.dedup();
    if alphas.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need 3 distinct step rates, got {}",
            alphas.len()
        )));
    }

    // Fit in t = alpha/scale to keep the normal equations well conditioned.
    let scale = samples.iter().map(|(a, _)| a.abs()).fold(0.0, f64::max);
    let mut g = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for &(alpha, y) in samples {
        let t = alpha / scale;
        let row = [1.0, t, t * t];
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] += row[i] * row[j];
            }
            rhs[i] += row[i] * y;
        }
    }

    let b = solve3(g, rhs)
        .ok_or_else(|| Error::DegenerateFit("singular normal equations".into()))?;
    Ok((b[0], b[1] / scale, b[2] / (scale * scale)))
}

/// Gaussian elimination with partial pivoting on a 3x3 system.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let factor = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// The analytic minimizer -beta1/(2*beta2) when the parabola opens upward,
/// otherwise the positive sampled step with the smallest response; clamped
/// to [0, ell] either way.
pub fn choose_step(betas: (f64, f64, f64), samples: &[(f64, f64)], ell: f64) -> f64 {
    let (_, beta1, beta2) = betas;
    if beta2 > 0.0 {
        let alpha_min = -beta1 / (2.0 * beta2);
        if alpha_min.is_finite() {
            return alpha_min.clamp(0.0, ell);
        }
    }
    samples
        .iter()
        .filter(|(a, _)| *a > 0.0)
        .min_by(|(_, y1), (_, y2)| y1.total_cmp(y2))
        .map(|(a, _)| a.clamp(0.0, ell))
        .unwrap_or(0.0)
}

/// Full step-rate search: bound the step, evaluate `n` equally spaced
/// points in [ell/n, ell] (the response at 0 is already known), fit the
/// quadratic and pick the step. The evaluator receives the step rate and
/// the clipped candidate point.
pub fn line_search<E>(
    x: &DemandVector,
    d: &[f64],
    f_at_zero: f64,
    evaluator: E,
    bounds: &Bounds,
    gen: &GenerationConstraints,
    n: usize,
) -> Result<LineSearchResult>
where
    E: Fn(f64, &DemandVector) -> Result<f64> + Sync + Send,
{
    let ell = determine_max_step_rate(x, bounds, d, gen, DEFAULT_ELL_DELTA, DEFAULT_EPS1)?;
    if ell <= ELL_FLOOR {
        return Ok(LineSearchResult {
            ell: 0.0,
            samples: vec![(0.0, f_at_zero)],
            betas: (f_at_zero, 0.0, 0.0),
            eta: 0.0,
        });
    }

    let alphas: Vec<f64> = (1..=n).map(|i| ell * i as f64 / n as f64).collect();
    let evaluated: Vec<Result<f64>> = par::map_collect(alphas.clone(), |alpha| {
        let point = candidate(x, d, alpha, bounds);
        evaluator(alpha, &point)
    });

    let mut samples = vec![(0.0, f_at_zero)];
    for (alpha, value) in alphas.into_iter().zip(evaluated) {
        samples.push((alpha, value?));
    }

    let betas = fit_quadratic(&samples)?;
    let eta = choose_step(betas, &samples, ell);
    Ok(LineSearchResult { ell, samples, betas, eta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn loose_gen() -> GenerationConstraints {
        GenerationConstraints { groups: vec![] }
    }

    fn one_dim(upper: f64) -> Bounds {
        Bounds::new(vec![0.0], vec![upper]).unwrap()
    }

    #[test]
    fn max_step_binds_at_box_face() {
        let x = DemandVector::zeros(1);
        let ell = determine_max_step_rate(
            &x,
            &one_dim(10.0),
            &[1.0],
            &loose_gen(),
            DEFAULT_ELL_DELTA,
            DEFAULT_EPS1,
        )
        .unwrap();
        assert!((ell - 10.0).abs() < 1e-6, "ell = {ell}");
    }

    #[test]
    fn max_step_interior_direction_reaches_faces() {
        let bounds = Bounds::new(vec![0.0, 0.0], vec![1e6, 1e6]).unwrap();
        let x = DemandVector::new(vec![5e5, 5e5]);
        let d = [1.0, 2.0];
        let ell =
            determine_max_step_rate(&x, &bounds, &d, &loose_gen(), DEFAULT_ELL_DELTA, DEFAULT_EPS1)
                .unwrap();
        // The slower coordinate binds last, at (1e6 - 5e5) / 1 after the
        // faster one clips; only then is the point fully binding.
        assert!((ell - 5e5).abs() < 1.0, "ell = {ell}");
    }

    #[test]
    fn max_step_zero_under_tight_productions() {
        let gen = GenerationConstraints { groups: vec![(5.0, vec![0, 1])] };
        let bounds = Bounds::new(vec![0.0, 0.0], vec![10.0, 10.0]).unwrap();
        let x = DemandVector::new(vec![2.0, 3.0]);
        let ell = determine_max_step_rate(
            &x,
            &bounds,
            &[1.0, 1.0],
            &gen,
            DEFAULT_ELL_DELTA,
            DEFAULT_EPS1,
        )
        .unwrap();
        assert!(ell < 1e-6, "ell = {ell}");
    }

    #[test]
    fn max_step_rejects_zero_direction() {
        let x = DemandVector::zeros(2);
        let bounds = Bounds::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            determine_max_step_rate(&x, &bounds, &[0.0, 0.0], &loose_gen(), 1e8, 1e-8),
            Err(Error::ZeroDirection)
        ));
    }

    #[test]
    fn max_step_postcondition_on_random_instances() {
        let mut state = 42u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 33) as f64 / (1u64 << 31) as f64
        };
        for _ in 0..25 {
            let dim = 3;
            let upper: Vec<f64> = (0..dim).map(|_| 5.0 + 20.0 * next()).collect();
            let bounds = Bounds::new(vec![0.0; dim], upper.clone()).unwrap();
            let x = DemandVector::new(upper.iter().map(|u| 0.5 * u * next()).collect());
            let d: Vec<f64> = (0..dim).map(|_| next() - 0.3).collect();
            if d.iter().all(|&v| v == 0.0) {
                continue;
            }
            let cap = x.values.iter().sum::<f64>() + 4.0 * next() + 0.5;
            let gen = GenerationConstraints { groups: vec![(cap, (0..dim).collect())] };

            let ell =
                determine_max_step_rate(&x, &bounds, &d, &gen, DEFAULT_ELL_DELTA, DEFAULT_EPS1)
                    .unwrap();
            let at_ell = candidate(&x, &d, ell, &bounds);
            assert!(gen.is_feasible(&at_ell.values), "returned ell must be feasible");

            // Just past the returned step the point is infeasible, fully
            // binding, or clipping has frozen it.
            let past = candidate(&x, &d, ell + 1e-6 * ell.max(1.0), &bounds);
            let frozen = past == at_ell;
            assert!(
                !gen.is_feasible(&past.values) || fully_binding(&past, &d, &bounds) || frozen,
                "ell = {ell} is not maximal"
            );
        }
    }

    #[test]
    fn fit_interpolates_three_points() {
        let betas = fit_quadratic(&[(0.0, 11.0), (2.0, 3.0), (4.0, 3.0)]).unwrap();
        assert_relative_eq!(betas.0, 11.0, epsilon = 1e-9);
        assert_relative_eq!(betas.1, -6.0, epsilon = 1e-9);
        assert_relative_eq!(betas.2, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn fit_handles_lines_and_constants() {
        let betas = fit_quadratic(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]).unwrap();
        assert_relative_eq!(betas.0, 0.0, epsilon = 1e-10);
        assert_relative_eq!(betas.1, 1.0, epsilon = 1e-10);
        assert_relative_eq!(betas.2, 0.0, epsilon = 1e-10);

        let betas = fit_quadratic(&[(0.0, 7.0), (1.0, 7.0), (3.0, 7.0)]).unwrap();
        assert_relative_eq!(betas.0, 7.0, epsilon = 1e-10);
        assert_relative_eq!(betas.1, 0.0, epsilon = 1e-10);
        assert_relative_eq!(betas.2, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn fit_zero_residual_for_three_points() {
        let points = [(0.0, 2.5), (1.5, -0.75), (4.0, 9.0)];
        let (b0, b1, b2) = fit_quadratic(&points).unwrap();
        for (a, y) in points {
            assert!((b0 + b1 * a + b2 * a * a - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn fit_rejects_duplicate_alphas() {
        assert!(matches!(
            fit_quadratic(&[(0.0, 1.0), (0.0, 2.0), (1.0, 3.0)]),
            Err(Error::DegenerateFit(_))
        ));
    }

    #[test]
    fn step_choice() {
        // Analytic minimizer of the fitted parabola.
        assert_relative_eq!(choose_step((11.0, -6.0, 1.0), &[], 10.0), 3.0);
        // Smallest positive-sample response when the parabola is flat.
        let samples = [(0.0, 5.0), (2.0, 1.0), (4.0, 9.0)];
        assert_eq!(choose_step((0.0, 1.0, 0.0), &samples, 4.0), 2.0);
        // Clamp when the analytic minimizer overshoots the bound.
        assert_eq!(choose_step((0.0, -8.0, 1.0), &samples, 3.0), 3.0);
    }

    #[test]
    fn recovers_quadratic_minimizer_exactly() {
        // y(alpha) = (alpha - 3)^2 + 2 sampled at 0, 3, 6.
        let x = DemandVector::zeros(1);
        let bounds = one_dim(6.0);
        let result = line_search(
            &x,
            &[1.0],
            11.0,
            |alpha, _| Ok((alpha - 3.0).powi(2) + 2.0),
            &bounds,
            &loose_gen(),
            DEFAULT_SAMPLES,
        )
        .unwrap();
        assert!((result.ell - 6.0).abs() < 1e-6);
        assert!((result.eta - 3.0).abs() < 1e-9, "eta = {}", result.eta);
    }

    #[test]
    fn random_convex_quadratics_recovered() {
        let mut state = 7u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 33) as f64 / (1u64 << 31) as f64
        };
        for _ in 0..50 {
            let opt = 1.0 + 8.0 * next();
            let curve = 0.1 + 3.0 * next();
            let offset = next();
            let x = DemandVector::zeros(1);
            let bounds = one_dim(10.0);
            let result = line_search(
                &x,
                &[1.0],
                curve * opt * opt + offset,
                |alpha, _| Ok(curve * (alpha - opt).powi(2) + offset),
                &bounds,
                &loose_gen(),
                DEFAULT_SAMPLES,
            )
            .unwrap();
            assert!((result.eta - opt).abs() < 1e-9, "eta {} vs {}", result.eta, opt);
        }
    }

    #[test]
    fn monotone_response_picks_smaller_sample() {
        let x = DemandVector::zeros(1);
        let bounds = one_dim(8.0);
        // Concave response: fit has beta2 < 0, so the smallest sampled
        // response among alpha > 0 wins.
        let result = line_search(
            &x,
            &[1.0],
            0.0,
            |alpha, _| Ok(alpha.sqrt()),
            &bounds,
            &loose_gen(),
            DEFAULT_SAMPLES,
        )
        .unwrap();
        assert_relative_eq!(result.eta, result.ell / 2.0);
    }

    #[test]
    fn zero_max_step_short_circuits() {
        let gen = GenerationConstraints { groups: vec![(1.0, vec![0])] };
        let bounds = one_dim(10.0);
        let x = DemandVector::new(vec![1.0]);
        let result = line_search(
            &x,
            &[1.0],
            4.0,
            |_alpha, _| panic!("no samples expected when ell is zero"),
            &bounds,
            &gen,
            DEFAULT_SAMPLES,
        )
        .unwrap();
        assert_eq!(result.eta, 0.0);
        assert_eq!(result.samples, vec![(0.0, 4.0)]);
    }
}
