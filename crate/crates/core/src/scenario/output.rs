//! Trace CSV and plot scripts.

use std::fmt::Write as _;
use std::path::Path;

use super::{io_error, write_file, ScenarioError, SimulationSummary, Written};
use crate::certify::fit_decay_points;
use crate::modal::Trace;
use crate::schedule::Parity;

const COLUMNS: [&str; 6] = ["t", "E_S", "E", "interval_index", "parity", "switch"];

pub const PLOT_FILES: [&str; 3] = ["energy.gp", "log_energy.gp", "cycle_ratios.gp"];

fn parity_name(p: Parity) -> &'static str {
    match p {
        Parity::Even => "even",
        Parity::Odd => "odd",
    }
}

/// Trace as CSV. Floats carry 17 significant digits so the text is a
/// lossless and deterministic image of the run.
pub fn trace_csv(trace: &Trace, metadata: Option<&str>) -> String {
    let mut out = String::with_capacity(96 * (trace.samples.len() + 2));
    if let Some(m) = metadata {
        out.push_str(m);
        out.push('\n');
    }
    out.push_str(&COLUMNS.join(","));
    out.push('\n');
    for s in &trace.samples {
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{},{},{}",
            s.t,
            s.es,
            s.e,
            s.interval,
            parity_name(s.parity()),
            u8::from(s.switch)
        );
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CsvRow {
    pub t: f64,
    pub es: f64,
    pub e: f64,
    pub interval: usize,
    pub switch: bool,
}

/// Parse a trace CSV; `#` lines are skipped and columns are found by name.
pub fn read_trace_csv(text: &str) -> Result<Vec<CsvRow>, ScenarioError> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or_else(|| ScenarioError::Plot("empty trace".into()))?.split(',').collect();
    let mut idx = [0usize; 6];
    for (slot, name) in idx.iter_mut().zip(COLUMNS) {
        *slot = header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| ScenarioError::Plot(format!("missing column `{name}`")))?;
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = |what: &str| ScenarioError::Plot(format!("data row {}: bad {what}", i + 1));
        let cell = |k: usize| cells.get(idx[k]).copied().ok_or_else(|| bad(COLUMNS[k]));
        let num = |k: usize| cell(k)?.parse::<f64>().map_err(|_| bad(COLUMNS[k]));
        rows.push(CsvRow {
            t: num(0)?,
            es: num(1)?,
            e: num(2)?,
            interval: cell(3)?.parse().map_err(|_| bad("interval_index"))?,
            switch: match cell(5)? {
                "1" => true,
                "0" => false,
                _ => return Err(bad("switch")),
            },
        });
    }
    if rows.is_empty() {
        return Err(ScenarioError::Plot("empty trace".into()));
    }
    Ok(rows)
}

fn datablock(out: &mut String, name: &str, header: &str, rows: impl Iterator<Item = String>) {
    let _ = writeln!(out, "${name} << EOD");
    let _ = writeln!(out, "# {header}");
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out.push_str("EOD\n");
}

/// Write gnuplot scripts for the trace at `trace_path`: energies against
/// time, `log E_S` with the fitted decay line, and per-cycle ratio bars.
///
/// `μ̂` comes from `summary.json` beside the trace when present, otherwise
/// from a fit through the cycle starts in the CSV.
pub fn emit_plots(trace_path: &Path, out_dir: &Path) -> Result<Written, ScenarioError> {
    let text = std::fs::read_to_string(trace_path).map_err(|e| io_error(trace_path, e))?;
    let rows = read_trace_csv(&text)?;
    let starts: Vec<&CsvRow> = rows.iter().filter(|r| r.switch && r.interval % 2 == 0).collect();

    let summary_path = trace_path.with_file_name("summary.json");
    let from_summary = std::fs::read_to_string(&summary_path)
        .ok()
        .and_then(|s| serde_json::from_str::<SimulationSummary>(&s).ok())
        .and_then(|s| s.decay_fit);
    let fit = from_summary.or_else(|| {
        let t: Vec<f64> = starts.iter().map(|r| r.t).collect();
        let e: Vec<f64> = starts.iter().map(|r| r.es).collect();
        fit_decay_points(&t, &e, e.first().copied().unwrap_or(0.0)).ok()
    });
    let es0 = rows[0].es;

    std::fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;
    let series = || rows.iter().map(|r| format!("{:.16e} {:.16e} {:.16e}", r.t, r.es, r.e));

    let mut energy = String::from("# energy against time\n");
    datablock(&mut energy, "trace", "t E_S E", series());
    energy.push_str("set xlabel 't'\nset ylabel 'energy'\nset key top right\n");
    energy.push_str("plot $trace using 1:2 with lines title 'E_S', $trace using 1:3 with lines title 'E'\n");

    let mut log = String::from("# log standard energy with the fitted decay line\n");
    datablock(&mut log, "trace", "t E_S E", series());
    datablock(&mut log, "starts", "t_2n E_S", starts.iter().map(|r| format!("{:.16e} {:.16e}", r.t, r.es)));
    log.push_str("set xlabel 't'\nset ylabel 'E_S'\nset logscale y\n");
    match fit {
        Some(f) => {
            let _ = writeln!(log, "mu_hat = {:.16e}", f.mu);
            let _ = writeln!(log, "gamma_hat = {:.16e}", f.gamma);
            let _ = writeln!(log, "E0 = {es0:.16e}");
            log.push_str("fit_line(t) = gamma_hat * E0 * exp(-mu_hat * t)\n");
            log.push_str(
                "plot $trace using 1:2 with lines title 'E_S', \\\n     $starts using 1:2 with points pt 7 title 'cycle starts', \\\n     fit_line(x) with lines dt 2 title sprintf('fit, mu_hat = %.4g', mu_hat)\n",
            );
        }
        None => {
            log.push_str("# mu_hat unavailable: fewer than 4 positive cycle-start energies\n");
            log.push_str("plot $trace using 1:2 with lines title 'E_S', $starts using 1:2 with points pt 7 title 'cycle starts'\n");
        }
    }

    let mut ratios = String::from("# per-cycle ratios E_S(t_2n+2)/E_S(t_2n)\n");
    datablock(
        &mut ratios,
        "ratios",
        "n rho_n",
        starts.windows(2).enumerate().map(|(n, w)| {
            let rho = if w[0].es > 0.0 { w[1].es / w[0].es } else { f64::NAN };
            format!("{n} {rho:.16e}")
        }),
    );
    ratios.push_str("set xlabel 'cycle n'\nset ylabel 'rho_n'\nset style fill solid 0.5\nset boxwidth 0.8\nset yrange [0:*]\n");
    ratios.push_str("plot $ratios using 1:2 with boxes title 'rho_n', 1 with lines dt 2 title 'rho = 1'\n");

    let mut paths = Vec::new();
    for (name, body) in PLOT_FILES.iter().zip([energy, log, ratios]) {
        let p = out_dir.join(name);
        write_file(&p, &body)?;
        paths.push(p);
    }
    Ok(Written { paths })
}
