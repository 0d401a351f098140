//! CSV renderings of spectra, trajectories, sweeps and RWA comparisons.
//!
//! Floats are written with 17 significant digits; an optional leading
//! `#` line carries provenance.

use std::fmt::Write;

use crate::dynamics::Trajectory;
use crate::rwa::PairedTrajectory;
use crate::spectral::{GapState, SpectrumResult};
use crate::sweep::SweepResult;

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn start(comment: Option<&str>) -> String {
    let mut s = String::new();
    if let Some(c) = comment {
        for line in c.lines() {
            let _ = writeln!(s, "# {line}");
        }
    }
    s
}

fn push_row(out: &mut String, fields: impl IntoIterator<Item = String>) {
    let mut first = true;
    for f in fields {
        if !first {
            out.push(',');
        }
        out.push_str(&f);
        first = false;
    }
    out.push('\n');
}

/// `theta,E1,...,EL`
pub fn spectrum_csv(results: &[SpectrumResult], comment: Option<&str>) -> String {
    let mut out = start(comment);
    let l = results.first().map_or(0, SpectrumResult::dim);
    push_row(
        &mut out,
        std::iter::once("theta".to_string()).chain((1..=l).map(|k| format!("E{k}"))),
    );
    for r in results {
        push_row(
            &mut out,
            std::iter::once(fmt_f64(r.theta)).chain(r.eigenvalues.iter().map(|&e| fmt_f64(e))),
        );
    }
    out
}

/// `theta,site,population`, sites 1-based.
pub fn localization_csv(states: &[(f64, GapState)], comment: Option<&str>) -> String {
    let mut out = start(comment);
    out.push_str("theta,site,population\n");
    for (theta, g) in states {
        for (i, p) in g.populations.iter().enumerate() {
            push_row(
                &mut out,
                [fmt_f64(*theta), (i + 1).to_string(), fmt_f64(*p)],
            );
        }
    }
    out
}

/// `t,norm,fidelity,p1,...,pL`
pub fn trajectory_csv(tr: &Trajectory, comment: Option<&str>) -> String {
    let mut out = start(comment);
    let l = tr.populations.first().map_or(0, Vec::len);
    push_row(
        &mut out,
        ["t", "norm", "fidelity"]
            .into_iter()
            .map(String::from)
            .chain((1..=l).map(|k| format!("p{k}"))),
    );
    for (k, row) in tr.populations.iter().enumerate() {
        push_row(
            &mut out,
            [tr.times[k], tr.norms[k], tr.fidelity_vs_target[k]]
                .into_iter()
                .chain(row.iter().copied())
                .map(fmt_f64),
        );
    }
    out
}

/// `omega,T,fidelity,steps,converged`
pub fn sweep_csv(result: &SweepResult, comment: Option<&str>) -> String {
    let mut out = start(comment);
    out.push_str("omega,T,fidelity,steps,converged\n");
    for r in &result.rows {
        push_row(
            &mut out,
            [
                fmt_f64(r.omega),
                fmt_f64(r.t_strength),
                fmt_f64(r.fidelity),
                r.steps.to_string(),
                r.converged.as_str().to_string(),
            ],
        );
    }
    out
}

/// `t,na1_full,nb1_full,na2_full,p1_eff,p2_eff,p3_eff`
pub fn rwa_csv(pair: &PairedTrajectory, comment: Option<&str>) -> String {
    let mut out = start(comment);
    out.push_str("t,na1_full,nb1_full,na2_full,p1_eff,p2_eff,p3_eff\n");
    for (k, t) in pair.times.iter().enumerate() {
        push_row(
            &mut out,
            std::iter::once(*t)
                .chain(pair.full[k])
                .chain(pair.effective[k])
                .map(fmt_f64),
        );
    }
    out
}
