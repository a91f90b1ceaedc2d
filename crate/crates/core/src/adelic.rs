//! Boundary norms and Cauchy sequences of toric model divisors.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::berkovich::{trop, MonomialPoint};
use crate::conical::{self, check_reference, interpolate, ApproxReport, ConicalOracle, PLConical};
use crate::divisor::{supporting_function, ToricBoundaryDivisor};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::lattice::{Fan, LatticeVector};
use crate::rational::{self, Rat};

/// Default deepest subdivision level `from_oracle` will try.
pub const MAX_DEPTH: usize = 16;
/// A depth-0 interpolant this close to the oracle is taken as exact.
const EXACT_AT_ZERO: f64 = 1e-9;

fn headroom() -> Rat {
    rational::rat(5, 4)
}

/// A strictly positive boundary divisor `Z`, defining the boundary norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ToricBoundaryDivisor", into = "ToricBoundaryDivisor")]
pub struct BoundaryDatum {
    z: ToricBoundaryDivisor,
    sf: PLConical,
}

impl TryFrom<ToricBoundaryDivisor> for BoundaryDatum {
    type Error = Error;
    fn try_from(z: ToricBoundaryDivisor) -> Result<Self> {
        BoundaryDatum::new(z)
    }
}

impl From<BoundaryDatum> for ToricBoundaryDivisor {
    fn from(b: BoundaryDatum) -> Self {
        b.z
    }
}

impl BoundaryDatum {
    pub fn new(z: ToricBoundaryDivisor) -> Result<Self> {
        if let Some(ray) = z.coeffs().iter().position(|c| !c.is_positive()) {
            return Err(Error::NonPositiveBoundary { ray });
        }
        let sf = supporting_function(&z)?;
        Ok(Self { z, sf })
    }

    /// The reduced total boundary of a complete fan.
    pub fn total_boundary(fan: Fan) -> Result<Self> {
        let n = fan.rays().len();
        Self::new(ToricBoundaryDivisor::from_ints(fan, &vec![1; n])?)
    }

    pub fn divisor(&self) -> &ToricBoundaryDivisor {
        &self.z
    }

    pub fn sf(&self) -> &PLConical {
        &self.sf
    }

    /// Minimum of `SF_Z` on the L1 unit sphere.
    pub fn min_on_sphere(&self) -> f64 {
        self.z
            .fan()
            .rays()
            .iter()
            .zip(self.z.coeffs())
            .map(|(r, c)| rational::to_f64(&(c / r.l1_norm())))
            .fold(f64::INFINITY, f64::min)
    }
}

/// `inf { eps : -eps Z <= f <= eps Z }`; `None` is infinity.
pub fn boundary_norm(f: &PLConical, z: &BoundaryDatum) -> Result<Option<Rat>> {
    Ok(conical::sup_ratio(f, &z.sf)?.value)
}

/// A Cauchy sequence of model functions `f_i` with error schedule `eps_i`:
/// `||f_i - f_j||_Z <= eps_i` for `i < j`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "SequenceJson", into = "SequenceJson")]
pub struct AdelicToricDivisor {
    boundary: BoundaryDatum,
    terms: Vec<PLConical>,
    epsilons: Vec<Rat>,
    reports: Vec<ApproxReport>,
    source: Option<Source>,
}

/// Where lazily extended terms come from.
#[derive(Clone, Debug)]
struct Source {
    oracle: ConicalOracle,
    /// Fan of the deepest materialized term.
    fan: Fan,
}

#[derive(Serialize, Deserialize)]
struct SequenceJson {
    boundary: BoundaryDatum,
    terms: Vec<PLConical>,
    #[serde(with = "rational::serde_rat_vec")]
    epsilons: Vec<Rat>,
}

impl TryFrom<SequenceJson> for AdelicToricDivisor {
    type Error = Error;
    fn try_from(j: SequenceJson) -> Result<Self> {
        AdelicToricDivisor::new(j.boundary, j.terms, j.epsilons)
    }
}

impl From<AdelicToricDivisor> for SequenceJson {
    fn from(a: AdelicToricDivisor) -> Self {
        SequenceJson {
            boundary: a.boundary,
            terms: a.terms,
            epsilons: a.epsilons,
        }
    }
}

impl AdelicToricDivisor {
    pub fn new(boundary: BoundaryDatum, terms: Vec<PLConical>, epsilons: Vec<Rat>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Invalid("a sequence needs at least one term".into()));
        }
        if terms.len() != epsilons.len() {
            return Err(Error::DimensionMismatch {
                expected: terms.len(),
                found: epsilons.len(),
            });
        }
        let dim = boundary.z.fan().dim();
        if let Some(t) = terms.iter().find(|t| t.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: t.dim(),
            });
        }
        if epsilons.iter().any(Signed::is_negative) || epsilons.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::Invalid("epsilons must be nonnegative and non-increasing".into()));
        }
        Ok(Self {
            boundary,
            terms,
            epsilons,
            reports: Vec::new(),
            source: None,
        })
    }

    pub fn boundary(&self) -> &BoundaryDatum {
        &self.boundary
    }

    pub fn terms(&self) -> &[PLConical] {
        &self.terms
    }

    pub fn epsilons(&self) -> &[Rat] {
        &self.epsilons
    }

    /// Approximation reports, one per term, for sequences built from an oracle.
    pub fn reports(&self) -> &[ApproxReport] {
        &self.reports
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Materializes terms up to subdivision depth `depth` (so `depth + 1`
    /// terms) when the sequence was built from an oracle. Epsilons are
    /// re-measured over the longer prefix.
    pub fn extend_to_depth(&mut self, depth: usize) -> Result<()> {
        self.extend_to_depth_with(Exec::default(), depth)
    }

    pub fn extend_to_depth_with(&mut self, exec: Exec, depth: usize) -> Result<()> {
        let Some(source) = self.source.as_mut() else {
            return Err(Error::Invalid("sequence has no oracle to extend from".into()));
        };
        if self.terms.len() > depth {
            return Ok(());
        }
        while self.terms.len() <= depth {
            let d = self.terms.len();
            source.fan = source.fan.barycentric_subdivision()?;
            let (f, report) = interpolate(exec, &source.oracle, source.fan.clone(), d)?;
            self.terms.push(f);
            self.reports.push(report);
        }
        self.epsilons = measured_epsilons(exec, &self.terms, &self.boundary)?;
        Ok(())
    }
}

/// `eps_i = 5/4 * max_{j > i} ||f_i - f_j||_Z`, made non-increasing; the last
/// term reuses the last measured gap.
fn measured_epsilons(exec: Exec, terms: &[PLConical], z: &BoundaryDatum) -> Result<Vec<Rat>> {
    let k = terms.len();
    if k == 1 {
        return Ok(vec![Rat::zero()]);
    }
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let norms = exec.try_map(&pairs, |&(i, j)| difference_norm(&terms[i], &terms[j], z))?;
    let mut eps = vec![Rat::zero(); k];
    for (&(i, _), n) in pairs.iter().zip(&norms) {
        let n = n.clone().ok_or_else(|| Error::Invalid("terms differ off the boundary support".into()))?;
        if n > eps[i] {
            eps[i] = n;
        }
    }
    let last_gap = norms.last().cloned().flatten().unwrap_or_else(Rat::zero);
    eps[k - 1] = last_gap;
    for i in (0..k - 1).rev() {
        if eps[i + 1] > eps[i] {
            eps[i] = eps[i + 1].clone();
        }
    }
    Ok(eps.into_iter().map(|e| e * headroom()).collect())
}

fn difference_norm(f: &PLConical, g: &PLConical, z: &BoundaryDatum) -> Result<Option<Rat>> {
    let (fine, coarse) = if f.fan().rays().len() >= g.fan().rays().len() { (f, g) } else { (g, f) };
    let diff = fine.sub(coarse)?;
    Ok(conical::sup_ratio_with(Exec::Sequential, &diff, &z.sf)?.value)
}

/// One `(i, j)` comparison of a Cauchy check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairCheck {
    pub i: usize,
    pub j: usize,
    /// `||f_i - f_j||_Z` as `"p/q"`, or `"inf"`.
    pub norm: String,
    pub epsilon: String,
    pub pass: bool,
    /// Ray of the common refinement attaining the norm, reported on failure.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<LatticeVector>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CauchyReport {
    pub pass: bool,
    pub prefix: usize,
    pub pairs: Vec<PairCheck>,
}

/// Exact check of `||f_i - f_j||_Z <= eps_i` for all `i < j < prefix`.
pub fn verify_cauchy(a: &AdelicToricDivisor, z: &BoundaryDatum, prefix: usize) -> Result<CauchyReport> {
    verify_cauchy_with(Exec::default(), a, z, prefix)
}

pub fn verify_cauchy_with(exec: Exec, a: &AdelicToricDivisor, z: &BoundaryDatum, prefix: usize) -> Result<CauchyReport> {
    if prefix > a.len() {
        return Err(Error::Invalid(format!(
            "prefix {prefix} exceeds the {} materialized terms",
            a.len()
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..prefix).flat_map(|i| (i + 1..prefix).map(move |j| (i, j))).collect();
    let checks = exec.try_map(&pairs, |&(i, j)| {
        let diff = a.terms[i].sub(&a.terms[j])?;
        let ratio = conical::sup_ratio_with(Exec::Sequential, &diff, &z.sf)?;
        let eps = &a.epsilons[i];
        let pass = ratio.value.as_ref().is_some_and(|n| n <= eps);
        Ok::<_, Error>(PairCheck {
            i,
            j,
            norm: ratio.value.as_ref().map_or_else(|| "inf".to_string(), rational::format_rat),
            epsilon: rational::format_rat(eps),
            pass,
            witness: if pass { None } else { ratio.witness },
        })
    })?;
    Ok(CauchyReport {
        pass: checks.iter().all(|c| c.pass),
        prefix,
        pairs: checks,
    })
}

/// Interpolates `o` on successive barycentric subdivisions of `reference`
/// until consecutive terms are closer than `target_eps` in the boundary norm,
/// both by sampling and exactly.
pub fn from_oracle(o: &ConicalOracle, reference: &Fan, z: &BoundaryDatum, target_eps: &Rat) -> Result<AdelicToricDivisor> {
    from_oracle_with(Exec::default(), o, reference, z, target_eps, MAX_DEPTH, |_, _| {})
}

/// As [`from_oracle`] with an explicit depth cap, calling `on_term` as each
/// term is produced.
pub fn from_oracle_with(
    exec: Exec,
    o: &ConicalOracle,
    reference: &Fan,
    z: &BoundaryDatum,
    target_eps: &Rat,
    max_depth: usize,
    mut on_term: impl FnMut(&PLConical, &ApproxReport),
) -> Result<AdelicToricDivisor> {
    if !target_eps.is_positive() {
        return Err(Error::Invalid("target epsilon must be positive".into()));
    }
    check_reference(reference)?;
    o.check_homogeneity(reference.dim())?;
    let target = rational::to_f64(target_eps);
    let z_min = z.min_on_sphere();
    let mut fan = reference.clone();
    let mut terms: Vec<PLConical> = Vec::new();
    let mut reports = Vec::new();
    let mut estimate = f64::INFINITY;
    let mut converged = false;
    for depth in 0..=max_depth {
        if depth > 0 {
            fan = fan.barycentric_subdivision()?;
        }
        let (f, report) = interpolate(exec, o, fan.clone(), depth)?;
        on_term(&f, &report);
        if depth == 0 && report.deviation_estimate <= EXACT_AT_ZERO {
            terms.push(f);
            reports.push(report);
            converged = true;
            break;
        }
        if let Some(prev) = terms.last() {
            estimate = conical::sampled_difference(exec, &f, prev, conical::DEVIATION_SAMPLES) / z_min;
            if estimate < target {
                let exact = difference_norm(&f, prev, z)?;
                if exact.is_some_and(|n| &n < target_eps) {
                    terms.push(f);
                    reports.push(report);
                    converged = true;
                    break;
                }
            }
        }
        terms.push(f);
        reports.push(report);
    }
    if !converged {
        return Err(Error::NoConvergence {
            depth: max_depth,
            estimate,
        });
    }
    let epsilons = measured_epsilons(exec, &terms, z)?;
    Ok(AdelicToricDivisor {
        boundary: z.clone(),
        terms,
        epsilons,
        reports,
        source: Some(Source {
            oracle: o.clone(),
            fan,
        }),
    })
}

/// Green function value of an adelic divisor at a monomial point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GreenValue {
    pub value: String,
    pub value_f64: f64,
    pub certified_error: String,
    pub depth_used: usize,
}

/// Evaluates the deepest term at `trop(p)`. The error against the limit is
/// at most `eps_last * SF_Z(trop(p))`, which must not exceed `tol`. The
/// sequence is trusted to be Cauchy; run [`verify_cauchy`] first for
/// sequences of unknown origin.
pub fn green_of_adelic(a: &AdelicToricDivisor, p: &MonomialPoint, tol: &Rat) -> Result<GreenValue> {
    let x = trop(p);
    let last = a.len() - 1;
    let bound = &a.epsilons[last] * a.boundary.sf.eval(&x)?;
    if &bound > tol {
        return Err(Error::ToleranceUnreachable {
            required: rational::format_rat(tol),
            achieved: rational::format_rat(&bound),
        });
    }
    let value = a.terms[last].eval(&x)?;
    Ok(GreenValue {
        value_f64: rational::to_f64(&value),
        value: rational::format_rat(&value),
        certified_error: rational::format_rat(&bound),
        depth_used: last,
    })
}
