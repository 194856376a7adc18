//! `summarize`: aggregate posterior sample files across regions, produce the
//! per-label summary table, label comparisons and density exports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use lcmcr::posterior::{
    aggregate, compare_labels, density_export, summarize, BinSpec, PosteriorSamples,
};
use lcmcr::{Error, Result};

use crate::io;

pub struct SummarizeArgs {
    pub samples: PathBuf,
    pub output: PathBuf,
    pub level: f64,
    pub compare: Vec<(String, String)>,
    pub density: Vec<String>,
    pub bins: Option<usize>,
    /// Probability level of the one-sided difference bound.
    pub bound_q: f64,
}

fn provenance(samples: &PosteriorSamples) -> String {
    format!(
        "# config_hash: {}\n# region: {}\n# prior_scheme: {}\n# seed: {}\n",
        samples.meta.config_hash, samples.meta.region, samples.meta.prior_scheme,
        samples.meta.seed
    )
}

pub fn run(args: &SummarizeArgs) -> Result<()> {
    let files = io::collect_sample_files(&args.samples)?;
    let mut all = Vec::new();
    let mut n_obs_totals: Option<Vec<u64>> = None;
    for file in &files {
        let read = io::read_samples(file)?;
        if let Some(n_obs) = read.n_obs() {
            match &mut n_obs_totals {
                None => n_obs_totals = Some(n_obs),
                Some(totals) if totals.len() == n_obs.len() => {
                    for (t, v) in totals.iter_mut().zip(n_obs) {
                        *t += v;
                    }
                }
                _ => n_obs_totals = None,
            }
        }
        all.push(read.samples);
    }
    let combined = aggregate(&all)?;
    fs::create_dir_all(&args.output)?;

    // Per-label table in the shape: label, n, median (CI), imputed mean (sd).
    let summary = summarize(&combined, args.level)?;
    let mut table = provenance(&combined);
    writeln!(table, "# level: {}", args.level).expect("string write");
    writeln!(table, "# quantiles: type-7 (linear interpolation)").expect("string write");
    table.push_str("label,n_obs,median,ci_lower,ci_upper,mean,sd,imputed_mean,imputed_sd\n");
    let find = |name: &str| summary.rows.iter().find(|r| r.quantity == name);
    let mut print_rows = Vec::new();
    for (y, label) in combined.labels.iter().enumerate() {
        let n_row = find(&format!("N_{label}"))
            .ok_or_else(|| Error::Internal(format!("no N column for {label}")))?;
        let imp_row = find(&format!("imputed_{label}"));
        let n_obs = n_obs_totals.as_ref().map(|t| t[y].to_string()).unwrap_or_default();
        let (imp_mean, imp_sd) = imp_row.map(|r| (r.mean, r.sd)).unwrap_or((0.0, 0.0));
        writeln!(
            table,
            "{label},{n_obs},{:.1},{:.1},{:.1},{:.2},{:.2},{:.2},{:.2}",
            n_row.median, n_row.lower, n_row.upper, n_row.mean, n_row.sd, imp_mean, imp_sd
        )
        .expect("string write");
        print_rows.push(format!(
            "{label:<12} n={n_obs:<8} N = {:.0} [{:.0}, {:.0}]  imputed = {:.1} ({:.1})",
            n_row.median, n_row.lower, n_row.upper, imp_mean, imp_sd
        ));
    }
    let total = find("N_total").ok_or_else(|| Error::Internal("no N_total column".into()))?;
    let total_n_obs = n_obs_totals
        .as_ref()
        .map(|t| t.iter().sum::<u64>().to_string())
        .unwrap_or_default();
    writeln!(
        table,
        "TOTAL,{total_n_obs},{:.1},{:.1},{:.1},{:.2},{:.2},,",
        total.median, total.lower, total.upper, total.mean, total.sd
    )
    .expect("string write");
    fs::write(args.output.join("summary.csv"), &table)?;
    println!(
        "{} draws over {} region file(s); {}% central intervals",
        combined.n_draws(),
        files.len(),
        args.level * 100.0
    );
    for row in print_rows {
        println!("{row}");
    }
    println!(
        "{:<12} n={total_n_obs:<8} N = {:.0} [{:.0}, {:.0}]",
        "TOTAL", total.median, total.lower, total.upper
    );

    for (a, b) in &args.compare {
        let cmp = compare_labels(&combined, a, b, args.bound_q)?;
        let mut out = provenance(&combined);
        out.push_str(
            "label_a,label_b,pr_a_gt_b,pr_b_gt_a,pr_tie,median_diff,bound_q,diff_exceeds\n",
        );
        writeln!(
            out,
            "{a},{b},{:.6},{:.6},{:.6},{:.1},{:.3},{:.1}",
            cmp.pr_a_gt_b, cmp.pr_b_gt_a, cmp.pr_tie, cmp.median_diff, cmp.q, cmp.lower_bound
        )
        .expect("string write");
        fs::write(args.output.join(format!("comparison_{a}_vs_{b}.csv")), out)?;
        println!(
            "Pr(N_{a} > N_{b}) = {:.1}%; median difference {:.0}; with {:.0}% probability the \
             difference exceeds {:.0}",
            cmp.pr_a_gt_b * 100.0,
            cmp.median_diff,
            cmp.q * 100.0,
            cmp.lower_bound
        );
    }

    for quantity in &args.density {
        let grid = args.bins.map(|bins| {
            let values = combined.quantity(quantity).unwrap_or_default();
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            BinSpec { min: lo, max: hi + ((hi - lo) * 1e-9).max(1e-9), bins }
        });
        let table = density_export(&combined, quantity, grid)?;
        let mut out = provenance(&combined);
        if let Some(note) = &table.note {
            writeln!(out, "# note: {note}").expect("string write");
        }
        out.push_str("bin_start,bin_end,count,mass,kde\n");
        for i in 0..table.counts.len() {
            let kde = table
                .kde
                .as_ref()
                .map(|k| format!("{:.8e}", k[i].1))
                .unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{:.8},{kde}",
                table.edges[i], table.edges[i + 1], table.counts[i], table.mass[i]
            )
            .expect("string write");
        }
        fs::write(args.output.join(format!("density_{quantity}.csv")), out)?;
        println!("density table for {quantity}: {} bins", table.counts.len());
    }
    Ok(())
}

pub fn default_output_for(samples: &Path) -> PathBuf {
    if samples.is_dir() {
        samples.to_path_buf()
    } else {
        samples.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."))
    }
}
