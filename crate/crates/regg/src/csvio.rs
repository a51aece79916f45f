//! Versioned CSV tables. The first line is `# regg-csv v<version> <kind>`;
//! readers reject any other version.

use regg_core::graph_models::ModelKind;
use regg_core::law_harness::{EnvelopeChoice, LawRecord, RegimeFlags};

use crate::error::CliError;

pub const CSV_VERSION: u32 = 1;
const MAGIC: &str = "# regg-csv";

pub const LAW_COLUMNS: [&str; 15] = [
    "model", "N", "d", "seed", "trial", "E", "eta", "max_diag_err", "max_offdiag", "s_minus_m",
    "gamma", "phi", "f_xi_phi", "psi", "flag",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub kind: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(kind: &str, header: &[&str]) -> Table {
        Table { kind: kind.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = format!("{MAGIC} v{CSV_VERSION} {}\n", self.kind).into_bytes();
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        w.flush().expect("in-memory write");
        drop(w);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Table, CliError> {
        let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| CliError::Format("empty CSV".into()))?;
        let first = std::str::from_utf8(&bytes[..nl]).map_err(|_| CliError::Format("CSV header is not UTF-8".into()))?;
        let parts: Vec<&str> = first.trim_end().splitn(3, ' ').collect();
        let tag = parts.get(1).copied().unwrap_or("");
        if !first.starts_with(MAGIC) || parts.len() != 3 || !tag.starts_with("regg-csv") {
            return Err(CliError::Format("missing `# regg-csv` version line".into()));
        }
        let rest: Vec<&str> = parts[2].splitn(2, ' ').collect();
        let version = rest[0].strip_prefix('v').and_then(|v| v.parse::<u32>().ok());
        if version != Some(CSV_VERSION) {
            return Err(CliError::Format(format!("unsupported CSV version {:?}", rest[0])));
        }
        let kind = rest.get(1).copied().unwrap_or("").to_string();
        let mut r = csv::Reader::from_reader(&bytes[nl + 1..]);
        let header = r.headers().map_err(|e| CliError::Format(e.to_string()))?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec.map_err(|e| CliError::Format(e.to_string()))?.iter().map(String::from).collect());
        }
        Ok(Table { kind, header, rows })
    }
}

/// Round-trip formatting, plain decimal in the usual range.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn law_table(records: &[LawRecord]) -> Table {
    let mut t = Table::new("lawrecord", &LAW_COLUMNS);
    for r in records {
        t.push(vec![
            r.model.name().into(),
            r.n.to_string(),
            r.d.to_string(),
            r.seed.to_string(),
            r.trial.to_string(),
            fmt_f64(r.e),
            fmt_f64(r.eta),
            fmt_f64(r.max_diag_err),
            fmt_f64(r.max_offdiag),
            fmt_f64(r.s_minus_m),
            fmt_f64(r.gamma),
            fmt_f64(r.phi),
            fmt_f64(r.f_xi_phi),
            fmt_f64(r.psi),
            r.flags.code(),
        ]);
    }
    t
}

pub fn parse_law_table(t: &Table, envelope: EnvelopeChoice) -> Result<Vec<LawRecord>, CliError> {
    if t.kind != "lawrecord" || t.header != LAW_COLUMNS {
        return Err(CliError::Format("not a law-record table".into()));
    }
    let f = |s: &str| s.parse::<f64>().map_err(|_| CliError::Format(format!("bad number {s:?}")));
    let u = |s: &str| s.parse::<u64>().map_err(|_| CliError::Format(format!("bad integer {s:?}")));
    t.rows
        .iter()
        .map(|r| {
            Ok(LawRecord {
                model: ModelKind::parse(&r[0]).ok_or_else(|| CliError::Format(format!("bad model {:?}", r[0])))?,
                n: u(&r[1])? as usize,
                d: u(&r[2])? as usize,
                seed: u(&r[3])?,
                trial: u(&r[4])?,
                e: f(&r[5])?,
                eta: f(&r[6])?,
                max_diag_err: f(&r[7])?,
                max_offdiag: f(&r[8])?,
                s_minus_m: f(&r[9])?,
                gamma: f(&r[10])?,
                phi: f(&r[11])?,
                f_xi_phi: f(&r[12])?,
                psi: f(&r[13])?,
                envelope,
                flags: RegimeFlags::parse(&r[14]).ok_or_else(|| CliError::Format(format!("bad flag {:?}", r[14])))?,
            })
        })
        .collect()
}
