//! Choleski impulse responses of a fitted VECM and Monte Carlo bands.
//!
//! Responses are indexed `[horizon][(response, shock)]`, shocks labelled by
//! the variable they are attached to in the recursive ordering. A shock is
//! one standard deviation of its orthogonalized innovation.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regress::Design;
use crate::vecm::{level_var, ml_covariance, vecm_design, VecmModel};

/// A recursive ordering: a permutation of the model's variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ordering(Vec<String>);

impl Ordering {
    pub fn new(names: Vec<String>, variables: &[String]) -> Result<Self> {
        let mut a = names.clone();
        let mut b = variables.to_vec();
        a.sort();
        b.sort();
        if a != b || a.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!(
                "ordering {names:?} is not a permutation of {variables:?}"
            )));
        }
        Ok(Self(names))
    }

    /// Parses "E,A,P,Y,R".
    pub fn parse(list: &str, variables: &[String]) -> Result<Self> {
        Self::new(list.split(',').map(|s| s.trim().to_string()).collect(), variables)
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    /// Compact label such as "EAPYR", or names joined by '-' when any is longer than one character.
    pub fn label(&self) -> String {
        if self.0.iter().all(|n| n.chars().count() == 1) {
            self.0.concat()
        } else {
            self.0.join("-")
        }
    }

    /// Variable index of each ordered position.
    fn positions(&self, variables: &[String]) -> Vec<usize> {
        self.0
            .iter()
            .map(|n| variables.iter().position(|v| v == n).expect("validated ordering"))
            .collect()
    }
}

/// Lower-triangular L with L·Lᵀ = Σ.
pub fn choleski_factor(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !sigma.is_square() {
        return Err(Error::InvalidArgument("covariance matrix is not square".into()));
    }
    let scale = sigma.amax().max(f64::MIN_POSITIVE);
    if (sigma - sigma.transpose()).amax() > 1e-10 * scale {
        return Err(Error::InvalidArgument("covariance matrix is not symmetric".into()));
    }
    sigma
        .clone()
        .cholesky()
        .map(|c| c.unpack())
        .ok_or_else(|| Error::NotPositiveDefinite {
            min_eigenvalue: sigma.symmetric_eigenvalues().min(),
        })
}

/// Impact matrix: column j is the one-s.d. shock attached to variable j.
pub fn impact_matrix(sigma: &DMatrix<f64>, positions: &[usize]) -> Result<DMatrix<f64>> {
    let k = positions.len();
    let ordered = DMatrix::from_fn(k, k, |a, b| sigma[(positions[a], positions[b])]);
    let l = choleski_factor(&ordered)?;
    let mut b = DMatrix::<f64>::zeros(k, k);
    for a in 0..k {
        for c in 0..k {
            b[(positions[a], positions[c])] = l[(a, c)];
        }
    }
    Ok(b)
}

/// Ψ₀ = I, Ψ_h = Σ_j A_j Ψ_{h−j}, for h = 0..=horizons.
pub fn ma_matrices(a: &[DMatrix<f64>], horizons: usize) -> Vec<DMatrix<f64>> {
    let k = a[0].nrows();
    let mut psi: Vec<DMatrix<f64>> = Vec::with_capacity(horizons + 1);
    psi.push(DMatrix::identity(k, k));
    for h in 1..=horizons {
        let mut next = DMatrix::<f64>::zeros(k, k);
        for (j, aj) in a.iter().enumerate().take(h) {
            next += aj * &psi[h - 1 - j];
        }
        psi.push(next);
    }
    psi
}

fn responses(
    a: &[DMatrix<f64>],
    sigma: &DMatrix<f64>,
    positions: &[usize],
    horizons: usize,
) -> Result<Vec<DMatrix<f64>>> {
    let b = impact_matrix(sigma, positions)?;
    Ok(ma_matrices(a, horizons).iter().map(|p| p * &b).collect())
}

/// Point responses for h = 0..=horizons, each a response × shock matrix.
pub fn companion_irf(
    m: &VecmModel,
    ordering: &Ordering,
    horizons: usize,
) -> Result<Vec<DMatrix<f64>>> {
    if horizons == 0 {
        return Err(Error::InvalidArgument("horizons must be at least 1".into()));
    }
    let ordering = Ordering::new(ordering.0.clone(), &m.variables)?;
    responses(
        &m.level_coefficients(),
        &m.residual_covariance,
        &ordering.positions(&m.variables),
        horizons,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BandMethod {
    /// Coefficients normal around the estimates, Σ inverse-Wishart.
    #[default]
    Parametric,
    /// Resampled residuals, data regenerated and refit with β fixed.
    ResidualBootstrap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSpec {
    pub draws: usize,
    pub seed: u64,
    pub percentiles: (f64, f64),
    pub method: BandMethod,
}

impl McSpec {
    pub fn new(draws: usize, seed: u64) -> Self {
        Self {
            draws,
            seed,
            percentiles: (0.05, 0.95),
            method: BandMethod::Parametric,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrfResult {
    pub variables: Vec<String>,
    pub ordering: Ordering,
    pub horizons: usize,
    pub point: Vec<DMatrix<f64>>,
    pub lower: Vec<DMatrix<f64>>,
    pub upper: Vec<DMatrix<f64>>,
    pub spec: McSpec,
    pub rejected_draws: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Positive,
    Negative,
}

impl IrfResult {
    fn index(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown variable `{name}`")))
    }

    pub fn significant(&self, shock: usize, response: usize, h: usize) -> bool {
        let (lo, hi) = (self.lower[h][(response, shock)], self.upper[h][(response, shock)]);
        lo > 0.0 || hi < 0.0
    }

    /// (point, lower, upper) paths over horizons.
    pub fn path(&self, shock: &str, response: &str) -> Result<Vec<(f64, f64, f64)>> {
        let (s, r) = (self.index(shock)?, self.index(response)?);
        Ok((0..=self.horizons)
            .map(|h| (self.point[h][(r, s)], self.lower[h][(r, s)], self.upper[h][(r, s)]))
            .collect())
    }

    /// Long format, shocks and responses in ordering order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("shock,response,horizon,point,lower,upper,significant\n");
        let pos = self.ordering.positions(&self.variables);
        for &s in &pos {
            for &r in &pos {
                for h in 0..=self.horizons {
                    let _ = writeln!(
                        out,
                        "{},{},{},{:e},{:e},{:e},{}",
                        self.variables[s],
                        self.variables[r],
                        h,
                        self.point[h][(r, s)],
                        self.lower[h][(r, s)],
                        self.upper[h][(r, s)],
                        self.significant(s, r, h)
                    );
                }
            }
        }
        out
    }

    /// Point line with shaded band, horizon on the x axis.
    pub fn to_svg(&self, shock: &str, response: &str) -> Result<String> {
        let path = self.path(shock, response)?;
        let (w, h, pad) = (480.0, 300.0, 40.0);
        let lo = path.iter().map(|p| p.1.min(p.0)).fold(0.0_f64, f64::min);
        let hi = path.iter().map(|p| p.2.max(p.0)).fold(0.0_f64, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let x = |i: usize| pad + (w - 2.0 * pad) * i as f64 / self.horizons as f64;
        let y = |v: f64| pad + (h - 2.0 * pad) * (hi - v) / span;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
        );
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="13">Response of {response} to {shock} shock</text>"#,
            w / 2.0
        );
        let mut band: Vec<String> = path.iter().enumerate().map(|(i, p)| format!("{:.2},{:.2}", x(i), y(p.2))).collect();
        band.extend(path.iter().enumerate().rev().map(|(i, p)| format!("{:.2},{:.2}", x(i), y(p.1))));
        let _ = writeln!(s, r##"<polygon points="{}" fill="#c8d4e6" stroke="none"/>"##, band.join(" "));
        let _ = writeln!(
            s,
            r#"<line x1="{pad}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="black" stroke-width="0.8"/>"#,
            y(0.0),
            w - pad
        );
        let line: Vec<String> = path.iter().enumerate().map(|(i, p)| format!("{:.2},{:.2}", x(i), y(p.0))).collect();
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#1f3b73" stroke-width="1.6"/>"##,
            line.join(" ")
        );
        for tick in (0..=self.horizons).step_by(6) {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="10">{tick}</text>"#,
                x(tick),
                h - pad + 14.0
            );
        }
        for v in [lo, hi] {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="10">{v:.4}</text>"#,
                pad - 4.0,
                y(v) + 3.0
            );
        }
        s.push_str("</svg>\n");
        Ok(s)
    }
}

/// Horizons where the band excludes zero, with the band's sign.
pub fn significance_profile(r: &IrfResult, shock: &str, response: &str) -> Result<Vec<(usize, Sign)>> {
    let (s, v) = (r.index(shock)?, r.index(response)?);
    Ok((0..=r.horizons)
        .filter(|&h| r.significant(s, v, h))
        .map(|h| {
            let sign = if r.lower[h][(v, s)] > 0.0 { Sign::Positive } else { Sign::Negative };
            (h, sign)
        })
        .collect())
}

/// x[⌈p·n⌉ − 1] of the sorted sample.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = (p * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Redraws allowed for a single Monte Carlo draw before giving up.
const MAX_ATTEMPTS_PER_DRAW: usize = 100;

pub fn mc_bands(
    m: &VecmModel,
    ordering: &Ordering,
    horizons: usize,
    spec: &McSpec,
) -> Result<IrfResult> {
    if spec.draws < 100 {
        return Err(Error::InvalidArgument(format!("{} draws; at least 100 needed", spec.draws)));
    }
    let (p_lo, p_hi) = spec.percentiles;
    if !(0.0 < p_lo && p_lo < p_hi && p_hi < 1.0) {
        return Err(Error::InvalidArgument(format!("percentiles {:?} out of order", spec.percentiles)));
    }
    let point = companion_irf(m, ordering, horizons)?;
    let positions = ordering.positions(&m.variables);
    let sampler = Sampler::new(m, spec.method)?;
    let outcomes: Vec<Result<(Vec<f64>, usize)>> = (0..spec.draws)
        .into_par_iter()
        .map(|d| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(d as u64);
            let mut rejected = 0;
            loop {
                match sampler.draw(&mut rng).and_then(|(a, s)| responses(&a, &s, &positions, horizons)) {
                    Ok(r) => {
                        let flat = r.iter().flat_map(|x| x.iter().copied()).collect();
                        return Ok((flat, rejected));
                    }
                    Err(Error::NotPositiveDefinite { .. } | Error::SingularDesign { .. }) => {
                        rejected += 1;
                        if rejected >= MAX_ATTEMPTS_PER_DRAW {
                            return Err(Error::TooManyRejections {
                                rejected,
                                attempted: rejected,
                            });
                        }
                    }
                    Err(e) => return Err(e),
                }
            }
        })
        .collect();
    let mut draws = Vec::with_capacity(spec.draws);
    let mut rejected = 0;
    for o in outcomes {
        let (d, r) = o?;
        rejected += r;
        draws.push(d);
    }
    let attempted = spec.draws + rejected;
    if rejected * 10 > attempted {
        return Err(Error::TooManyRejections { rejected, attempted });
    }
    if rejected > 0 {
        log::warn!("{rejected} of {attempted} Monte Carlo draws rejected and redrawn");
    }
    let k = m.k();
    let len = (horizons + 1) * k * k;
    let mut lo_flat = vec![0.0; len];
    let mut hi_flat = vec![0.0; len];
    let mut column = vec![0.0; spec.draws];
    for i in 0..len {
        for (c, d) in column.iter_mut().zip(&draws) {
            *c = d[i];
        }
        column.sort_by(f64::total_cmp);
        lo_flat[i] = nearest_rank(&column, p_lo);
        hi_flat[i] = nearest_rank(&column, p_hi);
    }
    let unflatten = |flat: &[f64]| -> Vec<DMatrix<f64>> {
        flat.chunks(k * k).map(|c| DMatrix::from_column_slice(k, k, c)).collect()
    };
    Ok(IrfResult {
        variables: m.variables.clone(),
        ordering: ordering.clone(),
        horizons,
        point,
        lower: unflatten(&lo_flat),
        upper: unflatten(&hi_flat),
        spec: spec.clone(),
        rejected_draws: rejected,
    })
}

/// Draws level-VAR coefficients and a residual covariance.
struct Sampler<'a> {
    model: &'a VecmModel,
    method: BandMethod,
    coefficients: DMatrix<f64>,
    /// chol((XᵀX)⁻¹)
    xtx_inv_chol: DMatrix<f64>,
    /// chol((T·Σ̂)⁻¹)
    scale_inv_chol: DMatrix<f64>,
    df: f64,
}

impl<'a> Sampler<'a> {
    fn new(model: &'a VecmModel, method: BandMethod) -> Result<Self> {
        let k = model.k();
        let n = model.n_obs();
        let m = model.n_regressors();
        if n < m + k {
            return Err(Error::InsufficientData(format!(
                "{n} observations for {m} regressors and {k} equations"
            )));
        }
        if method == BandMethod::ResidualBootstrap && model.fit_data.is_none() {
            return Err(Error::InvalidArgument(
                "residual bootstrap needs the model's fit data".into(),
            ));
        }
        let scale = &model.residual_covariance * n as f64;
        let scale_inv = scale
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NotPositiveDefinite { min_eigenvalue: scale.symmetric_eigenvalues().min() })?;
        Ok(Self {
            model,
            method,
            coefficients: model.coefficient_matrix(),
            xtx_inv_chol: choleski_factor(&symmetrize(&model.xtx_inv))?,
            scale_inv_chol: choleski_factor(&symmetrize(&scale_inv))?,
            df: (n - m) as f64,
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Result<(Vec<DMatrix<f64>>, DMatrix<f64>)> {
        match self.method {
            BandMethod::Parametric => self.parametric(rng),
            BandMethod::ResidualBootstrap => self.bootstrap(rng),
        }
    }

    /// Σ ~ IW(T·Σ̂, T − m) by the Bartlett decomposition, then
    /// B ~ N(B̂, Σ ⊗ (XᵀX)⁻¹).
    fn parametric(&self, rng: &mut ChaCha8Rng) -> Result<(Vec<DMatrix<f64>>, DMatrix<f64>)> {
        let k = self.model.k();
        let mut a = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            let chi = ChiSquared::new(self.df - i as f64)
                .map_err(|e| Error::Numerical(format!("chi-square draw: {e}")))?;
            a[(i, i)] = chi.sample(rng).sqrt();
            for j in 0..i {
                a[(i, j)] = StandardNormal.sample(rng);
            }
        }
        // Wishart draw W = M Mᵀ with M lower triangular; Σ = W⁻¹
        let m = &self.scale_inv_chol * a;
        let m_inv = m
            .solve_lower_triangular(&DMatrix::identity(k, k))
            .ok_or(Error::NotPositiveDefinite { min_eigenvalue: 0.0 })?;
        let sigma = symmetrize(&(m_inv.transpose() * &m_inv));
        let sigma_chol = sigma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite { min_eigenvalue: sigma.symmetric_eigenvalues().min() })?
            .unpack();
        let rows = self.coefficients.nrows();
        let z = DMatrix::<f64>::from_fn(rows, k, |_, _| StandardNormal.sample(rng));
        let b = &self.coefficients + &self.xtx_inv_chol * z * sigma_chol.transpose();
        let drawn = self.model.with_coefficients(&b);
        Ok((drawn.level_coefficients(), sigma))
    }

    /// Regenerates the sample from resampled residuals and refits step two.
    fn bootstrap(&self, rng: &mut ChaCha8Rng) -> Result<(Vec<DMatrix<f64>>, DMatrix<f64>)> {
        let model = self.model;
        let data = model.fit_data.as_ref().expect("checked in Sampler::new");
        let (t_all, k) = data.levels.shape();
        let n = model.n_obs();
        let beta = &model.cointegrating_vector;
        let a = model.level_coefficients();
        let c = model.level_intercept();
        let mut y = data.levels.clone();
        for t in data.first_obs..t_all {
            let u = model.residuals.row(rng.random_range(0..n)).transpose();
            let mut next = &c + u;
            for (i, ai) in a.iter().enumerate() {
                next += ai * y.row(t - 1 - i).transpose();
            }
            y.set_row(t, &next.transpose());
        }
        let ec: Vec<f64> = (0..t_all).map(|t| y.row(t).dot(&beta.transpose()) - model.ec_intercept).collect();
        let (targets, regressors) = vecm_design(&y, &ec, model.lags_in_differences, data.first_obs)?;
        let design = Design::new(regressors)?;
        let b = design.solve(&targets);
        let residuals = &targets - design.x() * &b;
        let drawn = model.with_coefficients(&b);
        debug_assert_eq!(residuals.ncols(), k);
        Ok((
            level_var(&drawn.pi(), &drawn.short_run),
            ml_covariance(&residuals),
        ))
    }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Deterministic level-VAR path from the given history and shock sequence;
/// row `t` of `shocks` enters period `history.len() + t`.
pub fn simulate_level_var(
    a: &[DMatrix<f64>],
    intercept: &DVector<f64>,
    history: &[DVector<f64>],
    shocks: &[DVector<f64>],
) -> Vec<DVector<f64>> {
    let mut y: Vec<DVector<f64>> = history.to_vec();
    for u in shocks {
        let t = y.len();
        let mut next = intercept + u;
        for (i, ai) in a.iter().enumerate() {
            if t > i {
                next += ai * &y[t - 1 - i];
            }
        }
        y.push(next);
    }
    y.split_off(history.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::YearMonth;
    use crate::simulate::{panel_from_matrix, VecmProcess};
    use crate::vecm::{engle_granger_step1, fit_vecm};
    use proptest::prelude::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn fitted(n: usize, seed: u64, lags: usize) -> VecmModel {
        let g = DMatrix::from_row_slice(2, 2, &[0.2, 0.1, -0.1, 0.3]);
        let p = VecmProcess::rank_one(&[-0.3, 0.2], &[1.0, -1.0], vec![g]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = p.simulate(n, 100, &mut rng).unwrap();
        let panel = panel_from_matrix(&y, &["y1", "y2"], YearMonth::new(2000, 1).unwrap()).unwrap();
        let ec = engle_granger_step1(&panel, "y1").unwrap();
        fit_vecm(&panel, &ec, lags).unwrap()
    }

    #[test]
    fn choleski_examples() {
        assert_eq!(choleski_factor(&DMatrix::identity(2, 2)).unwrap(), DMatrix::identity(2, 2));
        let l = choleski_factor(&DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0])).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 2f64.sqrt()]);
        assert!((l - expected).amax() < 1e-15);
        match choleski_factor(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])) {
            Err(Error::NotPositiveDefinite { min_eigenvalue }) => assert!((min_eigenvalue + 1.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ar1_responses_are_geometric() {
        let a = vec![DMatrix::from_element(1, 1, 0.5)];
        let psi = ma_matrices(&a, 6);
        for (h, p) in psi.iter().enumerate() {
            assert_eq!(p[(0, 0)], 0.5f64.powi(h as i32));
        }
    }

    #[test]
    fn diagonal_system_has_no_spillovers() {
        let a = vec![DMatrix::from_diagonal(&DVector::from_column_slice(&[0.5, -0.3]))];
        let r = responses(&a, &DMatrix::identity(2, 2), &[1, 0], 10).unwrap();
        assert!(r.iter().all(|m| m[(0, 1)] == 0.0 && m[(1, 0)] == 0.0));
    }

    #[test]
    fn matches_shocked_minus_baseline_simulation() {
        let m = fitted(300, 1, 2);
        let ord = Ordering::new(names(&["y2", "y1"]), &m.variables).unwrap();
        let h = 24;
        let irf = companion_irf(&m, &ord, h).unwrap();
        let a = m.level_coefficients();
        let c = m.level_intercept();
        let data = m.fit_data.as_ref().unwrap();
        let history: Vec<DVector<f64>> = (0..a.len()).map(|t| data.levels.row(t).transpose()).collect();
        let b = impact_matrix(&m.residual_covariance, &ord.positions(&m.variables)).unwrap();
        let zero = vec![DVector::zeros(2); h + 1];
        let base = simulate_level_var(&a, &c, &history, &zero);
        for s in 0..2 {
            let mut shocked = zero.clone();
            shocked[0] = b.column(s).into_owned();
            let path = simulate_level_var(&a, &c, &history, &shocked);
            for t in 0..=h {
                for r in 0..2 {
                    let d = path[t][r] - base[t][r];
                    assert!((d - irf[t][(r, s)]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn impact_equals_choleski_columns() {
        let m = fitted(200, 2, 1);
        let ord = Ordering::new(names(&["y1", "y2"]), &m.variables).unwrap();
        let irf = companion_irf(&m, &ord, 3).unwrap();
        let l = choleski_factor(&m.residual_covariance).unwrap();
        assert_eq!(irf[0], l);
        assert_eq!(irf[0][(0, 0)], m.residual_covariance[(0, 0)].sqrt());
    }

    #[test]
    fn ma_matrices_do_not_depend_on_ordering() {
        let m = fitted(200, 3, 2);
        let o1 = Ordering::new(names(&["y1", "y2"]), &m.variables).unwrap();
        let o2 = Ordering::new(names(&["y2", "y1"]), &m.variables).unwrap();
        let r1 = companion_irf(&m, &o1, 12).unwrap();
        let r2 = companion_irf(&m, &o2, 12).unwrap();
        let b1 = impact_matrix(&m.residual_covariance, &o1.positions(&m.variables)).unwrap();
        let b2 = impact_matrix(&m.residual_covariance, &o2.positions(&m.variables)).unwrap();
        let (i1, i2) = (b1.try_inverse().unwrap(), b2.try_inverse().unwrap());
        for h in 0..=12 {
            assert!((&r1[h] * &i1 - &r2[h] * &i2).amax() < 1e-12);
        }
        // second-ordered variable's own impact is the root of its residual variance
        assert!((r2[0][(1, 1)] - m.residual_covariance[(1, 1)].sqrt()).abs() == 0.0);
    }

    #[test]
    fn bad_orderings() {
        let v = names(&["a", "b"]);
        assert!(Ordering::new(names(&["a"]), &v).is_err());
        assert!(Ordering::new(names(&["a", "a"]), &v).is_err());
        assert!(Ordering::parse("b, a", &v).is_ok());
    }

    #[test]
    fn nearest_rank_matches_sort_oracle() {
        let xs = [5.0, 1.0, 4.0, 2.0, 3.0];
        let mut s = xs.to_vec();
        s.sort_by(f64::total_cmp);
        assert_eq!(nearest_rank(&s, 0.05), 1.0);
        assert_eq!(nearest_rank(&s, 0.2), 1.0);
        assert_eq!(nearest_rank(&s, 0.21), 2.0);
        assert_eq!(nearest_rank(&s, 0.95), 5.0);
    }

    #[test]
    fn bands_deterministic_and_ordered() {
        let m = fitted(200, 4, 1);
        let ord = Ordering::new(names(&["y1", "y2"]), &m.variables).unwrap();
        let spec = McSpec::new(200, 9);
        let a = mc_bands(&m, &ord, 12, &spec).unwrap();
        let b = mc_bands(&m, &ord, 12, &spec).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        for h in 0..=12 {
            assert!(a.lower[h].iter().zip(a.upper[h].iter()).all(|(l, u)| l <= u));
        }
        assert!(mc_bands(&m, &ord, 12, &McSpec::new(99, 1)).is_err());
    }

    #[test]
    fn bootstrap_bands_run() {
        let m = fitted(200, 5, 1);
        let ord = Ordering::new(names(&["y1", "y2"]), &m.variables).unwrap();
        let spec = McSpec {
            method: BandMethod::ResidualBootstrap,
            ..McSpec::new(100, 3)
        };
        let r = mc_bands(&m, &ord, 6, &spec).unwrap();
        for h in 0..=6 {
            assert!(r.lower[h].iter().zip(r.upper[h].iter()).all(|(l, u)| l <= u));
        }
    }

    #[test]
    fn bands_narrow_with_more_data() {
        let ord = |m: &VecmModel| Ordering::new(m.variables.clone(), &m.variables).unwrap();
        let width = |n: usize| {
            let m = fitted(n, 6, 1);
            let r = mc_bands(&m, &ord(&m), 6, &McSpec::new(300, 1)).unwrap();
            (0..=6).map(|h| (&r.upper[h] - &r.lower[h]).sum()).sum::<f64>()
        };
        let (w1, w2, w3) = (width(200), width(2000), width(20000));
        assert!(w1 > w2 && w2 > w3, "{w1} {w2} {w3}");
    }

    #[test]
    fn significance_profile_examples() {
        let k = 1;
        let mk = |lo: f64, hi: f64| vec![DMatrix::from_element(k, k, lo), DMatrix::from_element(k, k, hi)];
        let mut r = IrfResult {
            variables: names(&["x"]),
            ordering: Ordering::new(names(&["x"]), &names(&["x"])).unwrap(),
            horizons: 1,
            point: mk(1.0, 1.0),
            lower: mk(0.5, 0.1),
            upper: mk(1.5, 2.0),
            spec: McSpec::new(100, 0),
            rejected_draws: 0,
        };
        assert_eq!(
            significance_profile(&r, "x", "x").unwrap(),
            vec![(0, Sign::Positive), (1, Sign::Positive)]
        );
        r.lower = mk(-0.5, -0.1);
        assert!(significance_profile(&r, "x", "x").unwrap().is_empty());
        assert!(significance_profile(&r, "x", "nope").is_err());
        assert!(r.to_svg("x", "x").unwrap().starts_with("<svg"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn choleski_reconstructs(v in proptest::collection::vec(-2.0f64..2.0, 9)) {
            let a = DMatrix::from_row_slice(3, 3, &v);
            let s = &a * a.transpose() + DMatrix::identity(3, 3) * 0.1;
            let l = choleski_factor(&s).unwrap();
            prop_assert!((&l * l.transpose() - &s).amax() <= 1e-12 * s.amax());
            prop_assert!(l.diagonal().iter().all(|d| *d > 0.0));
            prop_assert!((0..3).all(|i| (i + 1..3).all(|j| l[(i, j)] == 0.0)));
        }
    }
}
