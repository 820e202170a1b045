use std::fmt;

use serde::Serialize;

use crate::error::Result;
use crate::instance::{check_condition7, psi_star, CovarianceInstance, PsiMode};
use crate::linalg;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub n: usize,
    pub t: usize,
    pub rank_c: usize,
    pub rank_nn: usize,
    pub rank_nt: usize,
    pub c_tt_pd: bool,
    pub c_pd: bool,
    pub condition7: bool,
    pub psi_original: Option<f64>,
    pub psi_complementary: Option<f64>,
}

impl Diagnostics {
    /// Condition (7) guarantees `C[S,S] ≻ 0 ⇔ C_T[S,S] ≻ 0`; without it
    /// nothing is claimed.
    pub fn well_posedness(&self) -> &'static str {
        if self.condition7 { "guaranteed" } else { "unverified" }
    }
}

pub fn check(cov: &CovarianceInstance) -> Result<Diagnostics> {
    let ranks = cov.ranks()?;
    Ok(Diagnostics {
        n: cov.n(),
        t: cov.t(),
        rank_c: ranks.rank_c,
        rank_nn: ranks.rank_nn,
        rank_nt: ranks.rank_nt,
        c_tt_pd: linalg::is_psd(&cov.c_tt(), true),
        c_pd: cov.is_pd(),
        condition7: check_condition7(cov),
        psi_original: psi_star(cov, PsiMode::Original).ok().map(|p| p.value),
        psi_complementary: psi_star(cov, PsiMode::Complementary).ok().map(|p| p.value),
    })
}

fn yes_no(b: bool) -> &'static str {
    if b { "yes" } else { "no" }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n = {}", self.n)?;
        writeln!(f, "t = {}", self.t)?;
        writeln!(f, "rank(C) = {}", self.rank_c)?;
        writeln!(f, "rank(C[N,N]) = {}", self.rank_nn)?;
        writeln!(f, "rank(C[N,T]) = {}", self.rank_nt)?;
        writeln!(f, "C[T,T] PD: {}", yes_no(self.c_tt_pd))?;
        writeln!(f, "C PD: {}", yes_no(self.c_pd))?;
        let verdict = if self.condition7 { "PASS" } else { "FAIL" };
        writeln!(f, "condition (7): {verdict}; well-posedness: {}", self.well_posedness())?;
        match self.psi_original {
            Some(p) => writeln!(f, "ψ*(original) = {p:.10}")?,
            None => writeln!(f, "ψ*(original) = undefined")?,
        }
        match self.psi_complementary {
            Some(p) => writeln!(f, "ψ*(complementary) = {p:.10}"),
            None => writeln!(f, "ψ*(complementary) = undefined"),
        }
    }
}
