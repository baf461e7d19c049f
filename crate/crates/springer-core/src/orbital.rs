//! The function-field side at small rank: Frobenius acting on the homology
//! model, Lefschetz traces on twisted quotient homology, brute-force twisted
//! point counts over the orbit strata, kappa-weighted orbital sums, and the
//! transfer identity relating a group to its endoscopic partner.
//!
//! Everything here is restricted to semisimple rank one on a rank-one
//! translation lattice (or a torus), which covers the split and
//! unramified-quadratic configurations.  The Frobenius acts on degree-2i
//! homology as the finite lattice symmetry scaled by q^i; on the point side
//! the same symmetry permutes the orbit strata, a fixed split multiplicative
//! direction contributing q - 1 points and an inverted one q + 1.

use crate::endoscopy::TransferData;
use crate::exactfield::Cyclotomic;
use crate::laurent::{solve_linear, tor_with_action, LaurentMatrix, LaurentPoly, SemilinearMap};
use crate::momentgraph::Space;
use crate::presentation::{homology_piece, left_action_map, PresentationError};
use crate::report::VerificationReport;
use crate::rootdata::{eta_character, AffineWeyl, LatticeCharacter, RootDatum, ValuationProfile};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OrbitalError {
    #[error("ramified torus out of scope")]
    RamifiedOutOfScope,
    #[error("orbital computations require a rank-one translation lattice")]
    LatticeRankGuard,
    #[error("orbital computations require semisimple rank at most one")]
    RootCountGuard,
    #[error("paving rationality not guaranteed: unequal valuation profile")]
    UnequalValuation,
    #[error("the character is not fixed by the Frobenius twist")]
    CharacterNotFixed,
    #[error("q must be at least 2")]
    InvalidPrimePower,
    #[error(transparent)]
    Presentation(#[from] PresentationError),
    #[error(transparent)]
    Endoscopy(#[from] crate::endoscopy::EndoscopyError),
    #[error(transparent)]
    Laurent(#[from] crate::laurent::LaurentError),
    #[error(transparent)]
    Datum(#[from] crate::rootdata::RootDatumError),
}

/// The arithmetic Frobenius data: the residue cardinality, the lattice
/// symmetry through which Frobenius acts, and a finite-order character fixed
/// by it.
#[derive(Debug, Clone)]
pub struct FrobeniusData {
    pub q: u64,
    pub tau: AffineWeyl,
    pub kappa: LatticeCharacter,
}

impl FrobeniusData {
    pub fn validate(&self) -> Result<(), OrbitalError> {
        if self.q < 2 {
            return Err(OrbitalError::InvalidPrimePower);
        }
        if !self
            .kappa
            .compose_with(&self.tau.finite)
            .same_character(&self.kappa)
        {
            return Err(OrbitalError::CharacterNotFixed);
        }
        Ok(())
    }

    /// The coefficient character of the local system: the inverse of kappa
    /// (the unramified situation identifies the two tori involved).
    pub fn eta(&self) -> LatticeCharacter {
        LatticeCharacter {
            order: self.kappa.order,
            exponents: self.kappa.exponents.iter().map(|e| -e).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Twist {
    Split,
    Inverted,
}

fn finite_twist(d: &RootDatum, tau: &AffineWeyl) -> Result<Twist, OrbitalError> {
    if d.rank() != 1 {
        return Err(OrbitalError::LatticeRankGuard);
    }
    match tau.finite.on_costar[0][0] {
        1 => Ok(Twist::Split),
        -1 => Ok(Twist::Inverted),
        _ => Err(OrbitalError::RamifiedOutOfScope),
    }
}

fn guard(d: &RootDatum, v: &ValuationProfile) -> Result<(), OrbitalError> {
    if d.rank() != 1 {
        return Err(OrbitalError::LatticeRankGuard);
    }
    if d.num_positive_roots() > 1 {
        return Err(OrbitalError::RootCountGuard);
    }
    if !v.is_equal_valuation() {
        return Err(OrbitalError::UnequalValuation);
    }
    Ok(())
}

/// Count of a torus-orbit stratum fixed by the twisted Frobenius: the
/// multiplicative direction contributes `q -/+ 1` (split / inverted) and
/// each affine direction contributes `q`.
fn stratum_count(q: u64, twist: Twist, dim: u32) -> i64 {
    if dim == 0 {
        return 1;
    }
    let gm = match twist {
        Twist::Split => q as i64 - 1,
        Twist::Inverted => q as i64 + 1,
    };
    gm * (q as i64).pow(dim - 1)
}

/// Fixed points of `shift . tau . Frobenius` on the fiber, counted modulo
/// the Frobenius-fixed translations.
///
/// The strata are permuted: a split twist shifts anchors, an inverted one
/// reflects them; a stratum fixed as a set contributes its twisted count.
pub fn twisted_point_count(
    space: Space,
    d: &RootDatum,
    v: &ValuationProfile,
    f: &FrobeniusData,
    lambda: &[i64],
) -> Result<i64, OrbitalError> {
    guard(d, v)?;
    f.validate()?;
    let twist = finite_twist(d, &f.tau)?;
    let q = f.q;
    let mu = lambda[0] + f.tau.translation[0];
    // Coroot step in lattice coordinates; 0 for a torus.
    let c = d.positive_coroots().first().map(|x| x[0]).unwrap_or(0);
    let vv = if d.num_positive_roots() == 1 {
        i64::from(v.get(0))
    } else {
        0
    };

    let mut total = 0i64;
    // Stratum families: (family tag, index, dimension).  The Grassmannian
    // has the projecting families only; the flag adds the fibered ones.
    let mut families: Vec<(u8, i64, u32)> = Vec::new();
    for n in -vv..=0 {
        families.push((0, n, (-n) as u32));
    }
    if space == Space::Flag {
        for n in -vv..=0 {
            let m = n + 1;
            // Index m = 1 is the reflection-type vertex family; index m <= 0
            // fibers with one extra affine direction over the projected
            // orbit of the same index.
            families.push((1, m, (1 - m) as u32));
        }
    }
    for (family, idx, dim) in families {
        match twist {
            Twist::Split => {
                // Anchors shift by mu: strata are fixed only when mu = 0,
                // and then every anchor is fixed; one class modulo the
                // lattice.
                if mu == 0 {
                    total += stratum_count(q, twist, dim);
                }
            }
            Twist::Inverted => {
                // Vertex-type families are swapped on the flag side; edge
                // and fibered strata reflect within their family.
                if space == Space::Flag && dim == 0 {
                    continue; // translation-type and reflection-type vertices trade places
                }
                let offset = match (space, family) {
                    (_, 0) => c * idx, // projecting family x_n
                    (_, _) => c * idx, // fibered family y_m, anchored at the reflection end
                };
                // Fixed anchor: 2a = mu - offset.
                if (mu - offset).rem_euclid(2) == 0 {
                    total += stratum_count(q, twist, dim);
                }
            }
        }
    }
    Ok(total)
}

/// Enumerate representatives of the twisted classes of the lattice that can
/// support fixed points, i.e. the kernel of the natural map to the
/// fundamental-group coinvariants.
fn stable_class_reps(d: &RootDatum, f: &FrobeniusData, window: i64) -> Vec<i64> {
    let c = d.positive_coroots().first().map(|x| x[0]).unwrap_or(0);
    let inverted = d.rank() == 1 && f.tau.finite.on_costar[0][0] == -1;
    // (1 - tau) Lambda: 0 for the split twist, 2Z for the inverted one.
    let modulus = if inverted { 2 } else { 0 };
    let mut reps = Vec::new();
    for lambda in -window..=window {
        // Membership in the coroot-lattice plus (1 - tau) Lambda.
        let in_kernel = if c == 0 {
            lambda == 0 || (inverted && lambda.rem_euclid(2) == 0)
        } else {
            let g = if inverted { num::integer::gcd(c, 2) } else { c };
            lambda.rem_euclid(g) == 0
        };
        if !in_kernel {
            continue;
        }
        if modulus != 0 {
            let canon = lambda.rem_euclid(modulus);
            if !reps.contains(&canon) {
                reps.push(canon);
            }
        } else {
            reps.push(lambda);
        }
    }
    reps.sort_unstable();
    reps
}

/// The kappa-weighted sum of twisted point counts over the stable classes.
/// The volume prefactor is 1 in every supported (unramified) configuration.
pub fn kappa_orbital_integral(
    space: Space,
    d: &RootDatum,
    v: &ValuationProfile,
    f: &FrobeniusData,
) -> Result<Cyclotomic, OrbitalError> {
    guard(d, v)?;
    f.validate()?;
    let window = i64::from(v.max() + 1)
        * d.positive_coroots()
            .first()
            .map(|x| x[0])
            .unwrap_or(1)
            .max(1)
        + f.tau.translation[0].abs()
        + 2;
    let mut acc = Cyclotomic::zero();
    for lambda in stable_class_reps(d, f, window) {
        let count = twisted_point_count(space, d, v, f, &[lambda])?;
        if count == 0 {
            continue;
        }
        let weight = f.kappa.value(&[lambda]);
        acc = acc.add(&weight.scale(&crate::exactfield::rat(count, 1)));
    }
    Ok(acc)
}

/// One homological degree of the trace table.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct TraceRow {
    pub m: usize,
    pub dim: usize,
    pub trace: Cyclotomic,
}

/// The two sides of the trace identity for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct TraceReport {
    pub schema_version: u32,
    pub label: String,
    pub rows: Vec<TraceRow>,
    pub alternating_sum: Cyclotomic,
    pub point_side: Option<Cyclotomic>,
    pub matched: Option<bool>,
}

impl TraceReport {
    pub fn exit_code(&self) -> i32 {
        match self.matched {
            Some(true) | None => 0,
            Some(false) => 1,
        }
    }
}

/// Lefschetz trace of the twisted Frobenius on the quotient homology with
/// coefficients in the character attached to kappa.
///
/// Frobenius acts on the degree-2i homology piece by the lattice symmetry
/// scaled by `q^i`; the trace on each Tor layer alternates in the Tor
/// degree.
pub fn lefschetz_trace(
    space: Space,
    d: &RootDatum,
    v: &ValuationProfile,
    f: &FrobeniusData,
) -> Result<TraceReport, OrbitalError> {
    if d.rank() != 1 {
        return Err(OrbitalError::LatticeRankGuard);
    }
    if d.num_positive_roots() > 1 {
        return Err(OrbitalError::RootCountGuard);
    }
    f.validate()?;
    finite_twist(d, &f.tau)?;
    let s = f.eta();
    let imax = if d.num_positive_roots() == 1 {
        v.get(0)
    } else {
        0
    };
    let mmax = 2 * imax as usize + 1;
    let mut dims = vec![0usize; mmax + 1];
    let mut traces = vec![Cyclotomic::zero(); mmax + 1];
    for i in 0..=imax {
        let h = homology_piece(d, v, space, i)?;
        if h.module.gens == 0 {
            continue;
        }
        // Transport the ambient action to the kernel generators.
        let ambient_action = left_action_map(&h.ambient, d, &f.tau)?;
        let k = h.lifts.len();
        let mut kmatrix = LaurentMatrix::zero(1, k, k);
        let mut stacked_cols: Vec<Vec<LaurentPoly>> = h.lifts.clone();
        stacked_cols.extend(h.ambient.module.relations.columns());
        let stacked = LaurentMatrix::from_columns(1, h.ambient.gens(), stacked_cols);
        for (j, lift) in h.lifts.iter().enumerate() {
            let image = ambient_action.apply(lift);
            let sol = solve_linear(&stacked, &image)
                .expect("the symmetry preserves the annihilator kernel");
            for i2 in 0..k {
                kmatrix.entries[i2][j] = sol[i2].clone();
            }
        }
        let action = SemilinearMap {
            twist: f.tau.finite.on_costar.clone(),
            matrix: kmatrix,
        };
        let tor = tor_with_action(&h.module, &action, &s);
        let qi = Cyclotomic::from_integer((f.q as i64).pow(i));
        let deg = 2 * i as usize;
        dims[deg] += tor.dim0;
        traces[deg] = traces[deg].add(&tor.trace0().mul(&qi));
        if deg + 1 <= mmax {
            dims[deg + 1] += tor.dim1;
            traces[deg + 1] = traces[deg + 1].add(&tor.trace1().mul(&qi));
        }
    }
    let mut alternating = Cyclotomic::zero();
    let mut rows = Vec::new();
    for m in 0..=mmax {
        if m % 2 == 0 {
            alternating = alternating.add(&traces[m]);
        } else {
            alternating = alternating.sub(&traces[m]);
        }
        rows.push(TraceRow {
            m,
            dim: dims[m],
            trace: traces[m].clone(),
        });
    }
    Ok(TraceReport {
        schema_version: crate::report::SCHEMA_VERSION,
        label: format!("{} {:?} q={} ", d.name, space, f.q),
        rows,
        alternating_sum: alternating,
        point_side: None,
        matched: None,
    })
}

/// Full two-sided report: the trace table against the kappa-orbital sum.
pub fn orbital_report(
    space: Space,
    d: &RootDatum,
    v: &ValuationProfile,
    f: &FrobeniusData,
) -> Result<TraceReport, OrbitalError> {
    let mut report = lefschetz_trace(space, d, v, f)?;
    let point = kappa_orbital_integral(space, d, v, f)?;
    report.matched = Some(report.alternating_sum == point);
    report.point_side = Some(point);
    Ok(report)
}

/// The full trace identity against the class-by-class point counts: for each
/// extra twist in a small window of class representatives, the trace of the
/// composed Frobenius equals the character-weighted count sum.
pub fn trace_identity_check(
    space: Space,
    d: &RootDatum,
    v: &ValuationProfile,
    f: &FrobeniusData,
    t_window: i64,
) -> Result<VerificationReport, OrbitalError> {
    guard(d, v)?;
    f.validate()?;
    let mut report = VerificationReport::new("twisted-trace-identity");
    let inverted = f.tau.finite.on_costar[0][0] == -1;
    let t_classes: Vec<i64> = if inverted {
        vec![0, 1]
    } else {
        (-t_window..=t_window).collect()
    };
    let count_window = i64::from(v.max() + 1)
        * d.positive_coroots()
            .first()
            .map(|x| x[0])
            .unwrap_or(1)
            .max(1)
        + f.tau.translation[0].abs()
        + t_window
        + 2;
    for t in &t_classes {
        // Left side: the trace of (shift by t) o tau o Frobenius.
        let composed = AffineWeyl::from_translation(vec![*t]).compose(&f.tau);
        let ft = FrobeniusData {
            q: f.q,
            tau: composed,
            kappa: f.kappa.clone(),
        };
        let lhs = lefschetz_trace(space, d, v, &ft)?.alternating_sum;
        // Right side: sum over lattice classes with inverse-eta weights.
        let lambda_classes: Vec<i64> = if inverted {
            vec![0, 1]
        } else {
            (-count_window..=count_window).collect()
        };
        let mut rhs = Cyclotomic::zero();
        for lambda in lambda_classes {
            let count = twisted_point_count(space, d, v, &ft, &[lambda])?;
            if count == 0 {
                continue;
            }
            // <lambda, eta>^{-1} = kappa(lambda).
            let weight = f.kappa.value(&[lambda]);
            rhs = rhs.add(&weight.scale(&crate::exactfield::rat(count, 1)));
        }
        report.record(
            format!("trace-vs-counts t={t}"),
            lhs == rhs,
            format!("trace={}, counts={}", lhs.to_text(), rhs.to_text()),
        );
    }
    Ok(report)
}

/// Verdict of the transfer identity between a group and its endoscopic
/// partner at one Frobenius configuration.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct TransferIdentityReport {
    pub schema_version: u32,
    pub label: String,
    pub r: u32,
    pub eta_sign: i64,
    pub group_side: TraceReport,
    pub subsystem_side: TraceReport,
    pub group_integral: Cyclotomic,
    pub subsystem_integral: Cyclotomic,
    pub pass: bool,
}

impl TransferIdentityReport {
    pub fn exit_code(&self) -> i32 {
        i32::from(!self.pass)
    }
}

/// Check the transfer identity: the subsystem's orbital sum equals the sign
/// character times `q^{-r}` times the group's orbital sum.  Both sides are
/// enumerated independently and reported with their full trace tables.
pub fn fundamental_lemma_check(
    t: &TransferData,
    f: &FrobeniusData,
) -> Result<TransferIdentityReport, OrbitalError> {
    let g = &t.endo.datum;
    guard(g, &t.profile)?;
    f.validate()?;
    let eta_sign = eta_character(&f.tau, g, &t.subsystem.h_roots, &t.profile)?;
    let h = t.h_datum()?;
    let g_integral = kappa_orbital_integral(Space::Grassmannian, g, &t.profile, f)?;
    let h_integral = kappa_orbital_integral(Space::Grassmannian, &h, &t.subsystem.h_profile, f)?;
    // eta q^{-r} O_G = O_H, cleared of denominators.
    let qr = Cyclotomic::from_integer((f.q as i64).pow(t.r()));
    let lhs = if eta_sign < 0 {
        g_integral.neg()
    } else {
        g_integral.clone()
    };
    let rhs = h_integral.mul(&qr);
    let pass = lhs == rhs;
    let group_side = orbital_report(Space::Grassmannian, g, &t.profile, f)?;
    let subsystem_side = orbital_report(Space::Grassmannian, &h, &t.subsystem.h_profile, f)?;
    Ok(TransferIdentityReport {
        schema_version: crate::report::SCHEMA_VERSION,
        label: format!("{} vs subsystem, q={}", g.name, f.q),
        r: t.r(),
        eta_sign,
        group_side,
        subsystem_side,
        group_integral: g_integral,
        subsystem_integral: h_integral,
        pass,
    })
}
