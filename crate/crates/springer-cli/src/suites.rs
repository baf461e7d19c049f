//! Subcommand runners: the lemma suite, presentation tables, moment graphs,
//! endoscopic comparisons, and orbital trace reports.

use crate::config::RunConfig;
use anyhow::{Context, Result};
use serde::Serialize;
use springer_core::endoscopy::{
    kernel_localization_check, verify_e2_shift, verify_localized_iso, TransferData,
};
use springer_core::exactfield::{rat, Rational};
use springer_core::momentgraph::{build_moment_graph, Space, Window};
use springer_core::orbital::{orbital_report, trace_identity_check, FrobeniusData};
use springer_core::polyalg::{check_relatively_prime_lemma, DiffOp, PolyRing};
use springer_core::presentation::{
    degree_lemma_nullity, expand_f_md, flag_span_check, graded_piece, span_check_chain, ExpandForm,
};
use springer_core::report::VerificationReport;
use springer_core::rootdata::{EndoscopicData, LatticeCharacter, RootDatum, ValuationProfile};
use std::path::{Path, PathBuf};

pub struct Artifacts {
    pub out_dir: PathBuf,
}

impl Artifacts {
    pub fn new(dir: &str) -> Result<Self> {
        let out_dir = PathBuf::from(dir);
        std::fs::create_dir_all(&out_dir)
            .with_context(|| format!("creating output directory {}", out_dir.display()))?;
        Ok(Artifacts { out_dir })
    }

    pub fn write<T: Serialize>(&self, name: &str, value: &T, text: &str) -> Result<()> {
        let json_path = self.out_dir.join(format!("{name}.json"));
        let json = serde_json::to_string_pretty(value)?;
        std::fs::write(&json_path, json.as_bytes())
            .with_context(|| format!("writing {}", json_path.display()))?;
        let text_path = self.out_dir.join(format!("{name}.txt"));
        std::fs::write(&text_path, text.as_bytes())
            .with_context(|| format!("writing {}", text_path.display()))?;
        Ok(())
    }
}

/// Evaluate a polynomial with rational coefficients at an integer.
fn eval_poly(coeffs: &[Rational], x: i64) -> Rational {
    let mut acc = Rational::from_integer(0.into());
    for c in coeffs.iter().rev() {
        acc = acc * Rational::from_integer(x.into()) + c;
    }
    acc
}

/// The alternating binomial sum `sum_k (-1)^k C(n,k) p(k)`.
pub fn alternating_binomial_sum(n: u32, coeffs: &[Rational]) -> Rational {
    let mut acc = Rational::from_integer(0.into());
    let mut c = 1i64;
    for k in 0..=i64::from(n) {
        let term = eval_poly(coeffs, k) * Rational::from_integer(c.into());
        acc += if k % 2 == 0 { term } else { -term };
        c = c * (i64::from(n) - k) / (k + 1);
    }
    acc
}

/// Run the combinatorial lemma suite at the configured bounds.
pub fn run_lemma_suite(cfg: &RunConfig) -> VerificationReport {
    let mut report = VerificationReport::new("lemma-suite");
    let bounds = &cfg.bounds;

    // Coprime annihilator checks on the two model operator pairs.
    let ring = PolyRing::new(vec!["x".into(), "y".into()]);
    let dx = DiffOp::partial(&ring, 0);
    let dy = DiffOp::partial(&ring, 1);
    report.merge(check_relatively_prime_lemma(
        &dx,
        &dy,
        bounds.degree_max.min(4),
    ));
    report.merge(check_relatively_prime_lemma(
        &dx,
        &dx.add(&dy),
        bounds.degree_max.min(3),
    ));

    // Closed form of the chain generators against the raw expansion.
    let mut all_equal = true;
    let mut all_killed = true;
    for m in -6..=6i64 {
        for d in 1..=5u32 {
            let raw = expand_f_md(m, d, ExpandForm::Raw);
            let closed = expand_f_md(m, d, ExpandForm::Closed);
            all_equal &= raw.equals(&closed);
            all_killed &= raw.kills_turning();
        }
    }
    report.record(
        "chain-generator-closed-form m in [-6,6], d in [1,5]",
        all_equal,
        String::new(),
    );
    report.record("chain-generator-turning-kernel", all_killed, String::new());

    // Span identity per valuation and homogeneous degree.
    for v in 1..=bounds.vmax {
        for h in 0..=bounds.degree_max {
            let w = i64::from(2 * (v + h) + 2);
            let ok = span_check_chain(v, h, (-w / 2, w / 2));
            report.record(format!("span-identity v={v} h={h}"), ok, String::new());
        }
    }

    // Degree bound: no nonzero turning-killed element above the valuation.
    for v in 1..=bounds.vmax.min(3) {
        for h in v..=(v + 2) {
            for d in (v + 1)..=(v + 2) {
                for m in [-2i64, 0, 3] {
                    let nullity = degree_lemma_nullity(v, h, d, m);
                    report.record(
                        format!("degree-bound v={v} h={h} d={d} m={m}"),
                        nullity == 0,
                        format!("nullity={nullity}"),
                    );
                }
            }
        }
    }

    // Alternating binomial sums.
    for n in 1..=8u32 {
        // p(k) = k^j for j < n vanishes; j = n gives (-1)^n n!.
        for j in 0..n {
            let mut coeffs = vec![Rational::from_integer(0.into()); j as usize + 1];
            coeffs[j as usize] = Rational::from_integer(1.into());
            let s = alternating_binomial_sum(n, &coeffs);
            report.record(
                format!("binomial-sum-vanishing n={n} j={j}"),
                s == Rational::from_integer(0.into()),
                String::new(),
            );
        }
        let mut coeffs = vec![Rational::from_integer(0.into()); n as usize + 1];
        coeffs[n as usize] = Rational::from_integer(1.into());
        let s = alternating_binomial_sum(n, &coeffs);
        let expected = {
            let mut f = 1i64;
            for i in 1..=i64::from(n) {
                f *= i;
            }
            rat(if n % 2 == 0 { f } else { -f }, 1)
        };
        report.record(
            format!("binomial-sum-top n={n}"),
            s == expected,
            String::new(),
        );
        // A fixed low-degree sample with rational coefficients.
        let sample = vec![rat(1, 2), rat(-2, 3), rat(3, 1)];
        if n >= 3 {
            let s = alternating_binomial_sum(n, &sample);
            report.record(
                format!("binomial-sum-lowdeg n={n}"),
                s == Rational::from_integer(0.into()),
                String::new(),
            );
        }
    }

    // Flag-side relation span.
    for v in 1..=bounds.vmax.min(3) {
        for k in 0..v {
            let w = i64::from(2 * (v + k) + 2);
            let ok = flag_span_check(v, k, (-w / 2, w / 2));
            report.record(format!("flag-span v={v} k={k}"), ok, String::new());
        }
    }

    report
}

pub fn cmd_lemmas(cfg: &RunConfig, artifacts: &Artifacts) -> Result<i32> {
    let report = run_lemma_suite(cfg);
    artifacts.write("lemmas", &report, &report.to_string())?;
    println!("{report}");
    Ok(report.exit_code())
}

#[derive(Serialize)]
struct PresentRow {
    degree: u32,
    generators: usize,
    invariant_factors: Vec<String>,
    free_rank: Option<usize>,
}

#[derive(Serialize)]
struct PresentReport {
    schema_version: u32,
    datum: String,
    space: String,
    valuations: Vec<u32>,
    rows: Vec<PresentRow>,
}

pub fn cmd_present(cfg: &RunConfig, artifacts: &Artifacts, space: Space, kmax: u32) -> Result<i32> {
    let d = cfg.datum()?;
    let v = cfg.valuations(&d)?;
    let mut rows = Vec::new();
    let mut text = format!(
        "presentation of {} ({:?}), valuations {:?}\n",
        d.name, space, v.values
    );
    for k in 0..=kmax {
        let piece = graded_piece(&d, &v, space, k)?;
        let (factors, free) = if d.rank() == 1 {
            let (t, f) = piece.invariant_factors();
            (t.iter().map(|p| p.to_string()).collect::<Vec<_>>(), Some(f))
        } else {
            (vec![], None)
        };
        text.push_str(&format!(
            "  degree {k}: {} generators, invariants [{}], free rank {}\n",
            piece.gens(),
            factors.join(", "),
            free.map(|f| f.to_string()).unwrap_or_else(|| "?".into())
        ));
        rows.push(PresentRow {
            degree: k,
            generators: piece.gens(),
            invariant_factors: factors,
            free_rank: free,
        });
    }
    let report = PresentReport {
        schema_version: springer_core::report::SCHEMA_VERSION,
        datum: d.name.clone(),
        space: format!("{space:?}").to_lowercase(),
        valuations: v.values.clone(),
        rows,
    };
    artifacts.write("present", &report, &text)?;
    print!("{text}");
    Ok(0)
}

pub fn cmd_graph(cfg: &RunConfig, artifacts: &Artifacts, space: Space, window: i64) -> Result<i32> {
    let d = cfg.datum()?;
    let v = cfg.valuations(&d)?;
    let w = Window {
        lo: vec![-window; d.rank()],
        hi: vec![window; d.rank()],
    };
    let graph = build_moment_graph(&d, &v, space, &w)?;
    let text = format!(
        "moment graph of {} ({:?}): {} vertices, {} edges in window [{}, {}]^{}\n",
        d.name,
        space,
        graph.vertices.len(),
        graph.edges.len(),
        -window,
        window,
        d.rank()
    );
    artifacts.write("graph", &graph, &text)?;
    print!("{text}");
    Ok(0)
}

pub fn cmd_endoscopy(
    cfg: &RunConfig,
    artifacts: &Artifacts,
    kmax: u32,
    mmax: usize,
) -> Result<i32> {
    let d = cfg.datum()?;
    let v = cfg.valuations(&d)?;
    let s = RunConfig::character(&cfg.s, &d)?;
    let endo = EndoscopicData {
        datum: d.clone(),
        s: s.clone(),
    };
    let t = TransferData::new(endo, v);
    let iso = verify_localized_iso(&t, kmax, cfg.bounds.jcap)?;
    let e2 = verify_e2_shift(&t, Space::Grassmannian, &s, mmax)?;
    let mut extra = VerificationReport::new("kernel-localization");
    if d.rank() == 1 {
        for k in 0..=kmax {
            let ok = kernel_localization_check(&t, k)?;
            extra.record(format!("cleared-kernel deg={k}"), ok, String::new());
        }
    }
    let mut text = String::new();
    text.push_str(&format!(
        "comparison for {}: subsystem roots {:?}, shift {}\n",
        d.name,
        t.subsystem.h_roots,
        t.r()
    ));
    for row in &iso.degrees {
        text.push_str(&format!(
            "  degree {}: kernel {:?}, cokernel {:?}, pass={}\n",
            row.degree, row.kernel_torsion, row.cokernel_torsion, row.pass
        ));
    }
    text.push_str(&format!("{}\n", iso.checks));
    for row in &e2.degrees {
        text.push_str(&format!(
            "  shifted-table m={}: left dim {}, right dim {}, pass={}\n",
            row.degree, row.source_free_rank, row.target_free_rank, row.pass
        ));
    }
    text.push_str(&format!("{extra}\n"));
    #[derive(Serialize)]
    struct Bundle<'a> {
        localized: &'a springer_core::endoscopy::ComparisonReport,
        shifted_table: &'a springer_core::endoscopy::ComparisonReport,
        kernel_localization: &'a VerificationReport,
    }
    artifacts.write(
        "endoscopy",
        &Bundle {
            localized: &iso,
            shifted_table: &e2,
            kernel_localization: &extra,
        },
        &text,
    )?;
    print!("{text}");
    let code = iso.exit_code().max(e2.exit_code()).max(extra.exit_code());
    Ok(code)
}

pub struct OrbitalOptions {
    pub space: Space,
    pub q_list: Vec<u64>,
    pub v_override: Option<u32>,
    pub kappa_override: Option<LatticeCharacter>,
    pub tau_override: Option<String>,
}

pub fn cmd_orbital(cfg: &RunConfig, artifacts: &Artifacts, opts: &OrbitalOptions) -> Result<i32> {
    let d: RootDatum = cfg.datum()?;
    let v: ValuationProfile = match opts.v_override {
        Some(x) => ValuationProfile::equal(&d, x),
        None => cfg.valuations(&d)?,
    };
    let kappa = match &opts.kappa_override {
        Some(k) => k.clone(),
        None => RunConfig::character(&cfg.kappa, &d)?,
    };
    let tau = cfg.tau(&d, opts.tau_override.as_deref())?;
    let mut reports = Vec::new();
    let mut identity = VerificationReport::new("twisted-trace-identity");
    let mut text = String::new();
    let mut code = 0;
    for &q in &opts.q_list {
        let f = FrobeniusData {
            q,
            tau: tau.clone(),
            kappa: kappa.clone(),
        };
        let rep = orbital_report(opts.space, &d, &v, &f)?;
        text.push_str(&format!(
            "q={q}: alternating trace {}, point side {}, match={:?}\n",
            rep.alternating_sum.to_text(),
            rep.point_side
                .as_ref()
                .map(|c| c.to_text())
                .unwrap_or_default(),
            rep.matched
        ));
        for row in &rep.rows {
            text.push_str(&format!(
                "   m={}: dim {}, trace {}\n",
                row.m,
                row.dim,
                row.trace.to_text()
            ));
        }
        code = code.max(rep.exit_code());
        let idrep = trace_identity_check(opts.space, &d, &v, &f, 2)?;
        code = code.max(idrep.exit_code());
        identity.merge(idrep);
        reports.push(rep);
    }
    text.push_str(&format!("{identity}\n"));
    #[derive(Serialize)]
    struct Bundle<'a> {
        reports: &'a [springer_core::orbital::TraceReport],
        identity: &'a VerificationReport,
    }
    artifacts.write(
        "orbital",
        &Bundle {
            reports: &reports,
            identity: &identity,
        },
        &text,
    )?;
    print!("{text}");
    Ok(code)
}

/// Load a config from an optional path, defaulting when absent.
pub fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}
