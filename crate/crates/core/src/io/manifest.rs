//! Dataset manifests: one CSV row per generated graph.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MetricPoint;
use crate::params::UnitPoint;
use crate::rmat::RmatParams;

pub const MANIFEST_HEADER: &str =
    "id,seed,n_param,e_param,a,b,c,d,u_n,u_a,u_b,u_c,n_final,e_final,clustering,dlog";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub id: u64,
    /// Seed that produced the edges (after any vanished-graph retries).
    pub seed: u64,
    pub n_param: u64,
    pub e_param: u64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub u_n: f64,
    pub u_a: f64,
    pub u_b: f64,
    pub u_c: f64,
    pub n_final: u64,
    pub e_final: u64,
    pub clustering: f64,
    pub dlog: f64,
}

impl ManifestRow {
    pub fn new(
        id: u64,
        seed: u64,
        params: &RmatParams,
        unit: &UnitPoint,
        n_final: usize,
        e_final: usize,
        metrics: &MetricPoint,
    ) -> Self {
        let [a, b, c, d] = params.r;
        let [u_n, u_a, u_b, u_c] = unit.0;
        ManifestRow {
            id,
            seed,
            n_param: params.n_param,
            e_param: params.e_param,
            a,
            b,
            c,
            d,
            u_n,
            u_a,
            u_b,
            u_c,
            n_final: n_final as u64,
            e_final: e_final as u64,
            clustering: metrics.clustering,
            dlog: metrics.dlog,
        }
    }

    pub fn params(&self) -> RmatParams {
        RmatParams { n_param: self.n_param, e_param: self.e_param, r: [self.a, self.b, self.c, self.d] }
    }

    pub fn unit(&self) -> UnitPoint {
        UnitPoint([self.u_n, self.u_a, self.u_b, self.u_c])
    }

    pub fn metrics(&self) -> MetricPoint {
        MetricPoint { clustering: self.clustering, dlog: self.dlog }
    }
}

pub fn write_rows<W: Write>(rows: &[ManifestRow], w: W) -> csv::Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record(MANIFEST_HEADER.split(','))?;
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(r: R) -> csv::Result<Vec<ManifestRow>> {
    csv::Reader::from_reader(r).deserialize().collect()
}

pub fn write_manifest(rows: &[ManifestRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_rows(rows, file).map_err(|source| Error::Csv { path: path.into(), source })
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRow>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let rows = read_rows(file).map_err(|source| Error::Csv { path: path.into(), source })?;
    let mut ids = std::collections::HashSet::new();
    if let Some(dup) = rows.iter().find(|r| !ids.insert(r.id)) {
        return Err(Error::InvalidConfig(format!("{}: duplicate id {}", path.display(), dup.id)));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: u64) -> ManifestRow {
        let p = RmatParams { n_param: 500, e_param: 2000, r: [0.5, 0.2, 0.2, 0.1] };
        let u = UnitPoint::of(&p).unwrap();
        ManifestRow::new(id, 99, &p, &u, 480, 1900, &MetricPoint { clustering: 0.125, dlog: -1.7 })
    }

    #[test]
    fn header_and_round_trip() {
        let rows = vec![row(0), row(1)];
        let mut buf = Vec::new();
        write_rows(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), MANIFEST_HEADER);
        assert_eq!(text.lines().count(), 3);
        assert!(!text.contains('\r'));
        assert_eq!(read_rows(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_manifest(&[row(3), row(3)], &path).unwrap();
        assert!(read_manifest(&path).is_err());
    }
}
