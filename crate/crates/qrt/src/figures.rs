//! Data behind the distillation figures: error bounds and achievable errors for copies of
//! isotropic states (2a–2c), and error against success probability for two 3×3 states (3a, 3b).

use std::time::Instant;

use qrt_core::distillation::{eigenvalue_bound, error_at_probability, Mode};
use qrt_core::free_sets::FreeSetSpec;
use qrt_core::states::{figure3a, figure3b, isotropic, maximally_entangled, n_copies};
use qrt_core::{HermitianOperator, Result as CoreResult};
use rayon::prelude::*;

use crate::error::{CliError, CliResult};
use crate::table::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    #[value(name = "2a")]
    F2a,
    #[value(name = "2b")]
    F2b,
    #[value(name = "2c")]
    F2c,
    #[value(name = "3a")]
    F3a,
    #[value(name = "3b")]
    F3b,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::F2a => "2a",
            Figure::F2b => "2b",
            Figure::F2c => "2c",
            Figure::F3a => "3a",
            Figure::F3b => "3b",
        }
    }

    /// Copies of the isotropic input for the error-bound figures.
    fn copies(self) -> Option<usize> {
        match self {
            Figure::F2a => Some(1),
            Figure::F2b => Some(2),
            Figure::F2c => Some(3),
            Figure::F3a | Figure::F3b => None,
        }
    }

    /// Three copies mean 64-dim solves; only run on request.
    pub fn is_slow(self) -> bool {
        self == Figure::F2c
    }
}

/// Probabilities at which the error-bound figures evaluate the achievable error.
pub const FIGURE2_PROBABILITIES: [f64; 3] = [1.0, 0.75, 0.5];

/// γ ∈ {0.05, 0.10, ..., 0.65}: the isotropic states that are entangled.
pub fn default_gamma_grid() -> Vec<f64> {
    (1..=13).map(|k| k as f64 / 20.0).collect()
}

/// p ∈ {0.01, 0.02, ..., 1.00}.
pub fn default_p_grid() -> Vec<f64> {
    (1..=100).map(|k| k as f64 / 100.0).collect()
}

fn status_of<T>(r: &CoreResult<T>) -> &'static str {
    match r {
        Ok(_) => "optimal",
        Err(_) => "numerical_trouble",
    }
}

fn num(r: &CoreResult<f64>) -> Cell {
    Cell::Num(*r.as_ref().unwrap_or(&f64::NAN))
}

fn pool(threads: Option<usize>) -> CliResult<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

/// One row of an error-bound figure.
pub fn figure2_row(gamma: f64, copies: usize) -> CliResult<Vec<Cell>> {
    let single = isotropic(gamma, 2)?;
    let rho = n_copies(&single, copies)?.into_op();
    let f_in = FreeSetSpec::ppt_copies(2, 2, copies)?;
    let f_out = FreeSetSpec::ppt(&[2, 2])?;
    let phi = maximally_entangled(2).into_op();
    let bounds = eigenvalue_bound(&rho, &f_in, &phi, &f_out);
    let errors: Vec<CoreResult<f64>> = FIGURE2_PROBABILITIES
        .iter()
        .map(|&p| error_at_probability(&rho, &f_in, &phi, &f_out, p, Mode::General))
        .collect();
    let ok = bounds.is_ok() && errors.iter().all(|e| e.is_ok());
    for e in errors.iter().filter_map(|e| e.as_ref().err()).chain(bounds.as_ref().err()) {
        log::warn!("figure point gamma = {gamma}, copies = {copies}: {e}");
    }
    let (eig, omega) = match &bounds {
        Ok(b) => (b.eigenvalue_bound, b.omega_bound),
        Err(_) => (f64::NAN, f64::NAN),
    };
    let mut row = vec![Cell::Num(gamma), Cell::Num(eig), Cell::Num(omega)];
    row.extend(errors.iter().map(num));
    row.push(if ok { "optimal" } else { "numerical_trouble" }.into());
    Ok(row)
}

/// Input state of the trade-off figures.
pub fn figure3_state(fig: Figure) -> HermitianOperator {
    match fig {
        Figure::F3a => figure3a().into_op(),
        _ => figure3b().into_op(),
    }
}

/// E(ρ → φ₃, p) under PPT operations.
pub fn figure3_error(rho: &HermitianOperator, p: f64) -> CoreResult<f64> {
    let f = FreeSetSpec::ppt(&[3, 3])?;
    let phi = maximally_entangled(3).into_op();
    error_at_probability(rho, &f, &phi, &f, p, Mode::General)
}

/// The table behind a figure, with rows in grid order.
pub fn run_figure(
    fig: Figure,
    gamma_grid: Option<&[f64]>,
    p_grid: Option<&[f64]>,
    threads: Option<usize>,
) -> CliResult<Table> {
    let pool = pool(threads)?;
    let start = Instant::now();
    let table = match fig.copies() {
        Some(n) => {
            let grid = gamma_grid.map_or_else(default_gamma_grid, <[f64]>::to_vec);
            let mut t = Table::new(&["gamma", "eigenvalue_bound", "omega_bound", "E_p1", "E_p075", "E_p05", "status"]);
            t.rows = pool.install(|| grid.par_iter().map(|&g| figure2_row(g, n)).collect::<CliResult<Vec<_>>>())?;
            t
        }
        None => {
            let grid = p_grid.map_or_else(default_p_grid, <[f64]>::to_vec);
            let rho = figure3_state(fig);
            let mut t = Table::new(&["p", "E", "status"]);
            t.rows = pool.install(|| {
                grid.par_iter()
                    .map(|&p| {
                        let e = figure3_error(&rho, p);
                        if let Err(err) = &e {
                            log::warn!("figure {} point p = {p}: {err}", fig.name());
                        }
                        vec![Cell::Num(p), num(&e), status_of(&e).into()]
                    })
                    .collect()
            });
            t
        }
    };
    log::info!("figure {} computed in {:?}", fig.name(), start.elapsed());
    Ok(table)
}
