//! Deterministic writers for the `tables/`, `stats/` and `figures/` tree.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::figures;
use super::sweep::MixtureReport;
use super::{AnalysisReport, ReportError};
use crate::provenance::Provenance;
use crate::scoring::{Measure, ALL_GROUP};

pub const TABLES: &str = "tables";
pub const STATS: &str = "stats";
pub const FIGURES: &str = "figures";

/// JSON envelope carrying the provenance of every stats fragment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsDocument<T> {
    pub provenance: Provenance,
    pub data: T,
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<PathBuf, ReportError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| ReportError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| ReportError::io(path, e))?;
    Ok(path.to_path_buf())
}

pub(crate) fn write_json<T: Serialize>(path: &Path, prov: &Provenance, data: &T) -> Result<PathBuf, ReportError> {
    let doc = StatsDocument {
        provenance: prov.clone(),
        data,
    };
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| ReportError::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.push('\n');
    write_file(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<StatsDocument<T>, ReportError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ReportError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| ReportError::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

pub(crate) fn svg_metadata(prov: &Provenance) -> String {
    format!(
        "psychoprobe {} config_sha256={} seed={}",
        prov.tool_version, prov.config_sha256, prov.seed
    )
}

/// Keeps file names portable.
pub(crate) fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Fixed four decimals; empty for missing or non-finite values.
pub(crate) fn num(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => super::svg::fmt4(v),
        _ => String::new(),
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

struct Table {
    text: String,
}

impl Table {
    fn new(prov: &Provenance, header: &str) -> Self {
        Table {
            text: format!("{}{header}\n", prov.csv_comment()),
        }
    }

    fn row(&mut self, fields: &[String]) {
        let _ = writeln!(self.text, "{}", fields.join(","));
    }
}

/// Writes the stats JSON, the CSV tables and the figures of an analysis.
pub fn emit_analysis(report: &AnalysisReport, prov: &Provenance, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, ReportError> {
    let out = out_dir.as_ref();
    let mut files = vec![write_json(&out.join(STATS).join("analysis.json"), prov, report)?];
    let tables = out.join(TABLES);

    let mut t = Table::new(prov, "group,measure,n,mean,sd,min,max");
    for g in &report.groups {
        for (measure, s) in &g.descriptives.measures {
            t.row(&[
                csv_field(&g.group),
                measure.clone(),
                s.n.to_string(),
                num(Some(s.mean)),
                num(Some(s.sd)),
                num(Some(s.min)),
                num(Some(s.max)),
            ]);
        }
    }
    files.push(write_file(&tables.join("descriptives.csv"), &t.text)?);

    for g in &report.groups {
        if let Some(m) = &g.correlation {
            let text = format!("{}{}", prov.csv_comment(), m.to_csv(4));
            files.push(write_file(&tables.join(format!("correlation_{}.csv", slug(&g.group))), &text)?);
        }
    }

    let mut t = Table::new(
        prov,
        "group,measure,n,w,p,normal_rejected,ppcc_r,ppcc_r2,threshold_r,threshold_r2,ppcc_rejected",
    );
    for g in &report.groups {
        for m in &g.measures {
            if let Some(nr) = &m.normality {
                let p = nr.ppcc.as_ref();
                t.row(&[
                    csv_field(&g.group),
                    m.measure.clone(),
                    nr.n.to_string(),
                    num(Some(nr.w)),
                    num(Some(nr.p)),
                    nr.normal_rejected.to_string(),
                    num(p.map(|p| p.r)),
                    num(p.map(|p| p.r2)),
                    num(p.map(|p| p.threshold_r)),
                    num(p.map(|p| p.threshold_r2)),
                    p.map_or(String::new(), |p| p.rejected.to_string()),
                ]);
            }
        }
    }
    files.push(write_file(&tables.join("normality.csv"), &t.text)?);

    let mut anova = Table::new(prov, "measure,f,p,df_between,df_within,eta_sq,omega_sq,omega_sq_raw");
    let mut lev = Table::new(prov, "measure,statistic,p,df_between,df_within,center");
    let mut tukey = Table::new(prov, "measure,a,b,diff,q,p");
    let mut ols = Table::new(prov, "measure,term,coef,se,t,p,r_squared,base_level");
    let mut resid = Table::new(prov, "measure,n,w,p,normal_rejected");
    for s in &report.series {
        if let Some(a) = &s.anova {
            anova.row(&[
                s.measure.clone(),
                num(Some(a.f)),
                num(Some(a.p)),
                a.df_between.to_string(),
                a.df_within.to_string(),
                num(Some(a.eta_sq)),
                num(Some(a.omega_sq)),
                num(Some(a.omega_sq_raw)),
            ]);
        }
        if let Some(l) = &s.levene {
            lev.row(&[
                s.measure.clone(),
                num(Some(l.statistic)),
                num(Some(l.p)),
                l.df_between.to_string(),
                l.df_within.to_string(),
                format!("{:?}", l.center).to_lowercase(),
            ]);
        }
        if let Some(tk) = &s.tukey {
            for c in &tk.comparisons {
                tukey.row(&[
                    s.measure.clone(),
                    csv_field(&c.a),
                    csv_field(&c.b),
                    num(Some(c.diff)),
                    num(Some(c.q)),
                    num(Some(c.p)),
                ]);
            }
        }
        if let Some(o) = &s.ols {
            for term in &o.terms {
                ols.row(&[
                    s.measure.clone(),
                    csv_field(&term.name),
                    num(Some(term.coef)),
                    num(Some(term.se)),
                    num(Some(term.t)),
                    num(Some(term.p)),
                    num(Some(o.r_squared)),
                    csv_field(&o.base_level),
                ]);
            }
        }
        if let Some(r) = &s.residual_normality {
            resid.row(&[
                s.measure.clone(),
                r.n.to_string(),
                num(Some(r.w)),
                num(Some(r.p)),
                r.normal_rejected.to_string(),
            ]);
        }
    }
    files.push(write_file(&tables.join("anova.csv"), &anova.text)?);
    files.push(write_file(&tables.join("levene.csv"), &lev.text)?);
    files.push(write_file(&tables.join("tukey.csv"), &tukey.text)?);
    files.push(write_file(&tables.join("ols.csv"), &ols.text)?);
    files.push(write_file(&tables.join("residual_normality.csv"), &resid.text)?);

    files.extend(emit_figures(report, prov, out)?);
    Ok(files)
}

/// Density overlays and box plots per measure, one heat map per group.
pub fn emit_figures(report: &AnalysisReport, prov: &Provenance, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, ReportError> {
    let dir = out_dir.as_ref().join(FIGURES);
    let meta = svg_metadata(prov);
    let languages: Vec<_> = report.groups.iter().filter(|g| g.group != ALL_GROUP).collect();
    let mut files = Vec::new();
    for m in Measure::all() {
        let label = m.label();
        let curves: Vec<(&str, _)> = languages
            .iter()
            .filter_map(|g| Some((g.group.as_str(), g.measure(&label)?.density.as_ref()?)))
            .collect();
        if !curves.is_empty() {
            let svg = figures::density_overlay(&format!("Density of {label} by language"), &curves, &meta);
            files.push(write_file(&dir.join(format!("kde_{}.svg", slug(&label))), &svg)?);
        }
        let boxes: Vec<(&str, _)> = report
            .groups
            .iter()
            .filter_map(|g| Some((g.group.as_str(), g.measure(&label)?.boxplot.as_ref()?)))
            .collect();
        if !boxes.is_empty() {
            let svg = figures::box_plots(&format!("{label} by language"), &boxes, &meta);
            files.push(write_file(&dir.join(format!("box_{}.svg", slug(&label))), &svg)?);
        }
    }
    for g in &report.groups {
        if let Some(m) = &g.correlation {
            let svg = figures::heat_map(&format!("Correlations, {}", g.group), m, &meta);
            files.push(write_file(&dir.join(format!("correlation_{}.svg", slug(&g.group))), &svg)?);
        }
    }
    Ok(files)
}

/// Stats JSON, selection tables and density figures of a mixture sweep.
pub fn emit_mixture(report: &MixtureReport, prov: &Provenance, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, ReportError> {
    let out = out_dir.as_ref();
    let mut files = vec![write_json(&out.join(STATS).join("mixture.json"), prov, report)?];

    let mut sel = Table::new(
        prov,
        "language,measure,n,best_k,waic_k1,waic_k2,waic_k3,converged_k1,converged_k2,converged_k3",
    );
    for s in &report.series {
        let waic_of = |k: usize| {
            s.fits
                .iter()
                .find(|f| f.k == k)
                .and_then(|f| f.summary.as_ref())
                .and_then(|sm| sm.waic.as_ref().map(|w| w.waic))
        };
        let conv_of = |k: usize| {
            s.fits
                .iter()
                .find(|f| f.k == k)
                .and_then(|f| f.summary.as_ref())
                .map_or(String::new(), |sm| sm.converged.to_string())
        };
        sel.row(&[
            csv_field(&s.language),
            s.measure.clone(),
            s.n.to_string(),
            s.selection.as_ref().map_or(String::new(), |r| r.best_k.to_string()),
            num(waic_of(1)),
            num(waic_of(2)),
            num(waic_of(3)),
            conv_of(1),
            conv_of(2),
            conv_of(3),
        ]);
    }
    files.push(write_file(&out.join(TABLES).join("waic_selection.csv"), &sel.text)?);

    let mut cls = Table::new(prov, "kind,best_k1,best_k2,best_k3,unresolved");
    for c in &report.classification {
        cls.row(&[
            c.kind.clone(),
            c.best_k[0].to_string(),
            c.best_k[1].to_string(),
            c.best_k[2].to_string(),
            c.unresolved.to_string(),
        ]);
    }
    files.push(write_file(&out.join(TABLES).join("waic_classification.csv"), &cls.text)?);
    files.extend(emit_mixture_figures(report, prov, out)?);
    Ok(files)
}

/// Posterior-mean density of the selected model for every resolved series.
pub fn emit_mixture_figures(report: &MixtureReport, prov: &Provenance, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, ReportError> {
    let out = out_dir.as_ref();
    let mut files = Vec::new();
    let meta = svg_metadata(prov);
    for s in &report.series {
        if let Some(d) = s.best().and_then(|f| f.density.as_ref()) {
            let title = format!("{} {}: best K = {}", s.language, s.measure, d.components.len());
            let svg = figures::mixture_density(&title, d, &meta);
            let name = format!("mixture_{}_{}.svg", slug(&s.language), slug(&s.measure));
            files.push(write_file(&out.join(FIGURES).join(name), &svg)?);
        }
    }
    Ok(files)
}
