//! Parallel build and binary file cache for the pseudo-density table.
//!
//! The cache stores the build parameters and each slice's grid data; the
//! sampling tables are rebuilt on load through the same code path as a
//! fresh build, so a cached table behaves identically.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use ctwa_core::exact_qc::{build_slice, PseudoDensityTable, TableParams, TableSlice};

const MAGIC: &[u8; 8] = b"CTWATB01";

/// Builds all slices (main grid plus guard bands) on the given pool.
pub fn build_parallel(params: &TableParams, pool: &rayon::ThreadPool) -> PseudoDensityTable {
    let xs = PseudoDensityTable::grid_positions(params);
    let slices: Vec<TableSlice> = pool.install(|| {
        xs.into_par_iter()
            .map(|x| build_slice(x, params))
            .collect()
    });
    PseudoDensityTable::from_slices(*params, slices).expect("slice grid consistent by construction")
}

/// Loads the cached table if it matches `params`, otherwise builds it (and
/// writes the cache when a path is given).
pub fn load_or_build(
    params: &TableParams,
    cache: Option<&Path>,
    pool: &rayon::ThreadPool,
) -> io::Result<PseudoDensityTable> {
    if let Some(path) = cache {
        if let Some(table) = load(path, params)? {
            return Ok(table);
        }
    }
    let table = build_parallel(params, pool);
    if let Some(path) = cache {
        save(&table, path)?;
    }
    Ok(table)
}

fn write_f64<W: Write>(w: &mut W, v: f64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_u64<W: Write>(w: &mut W, v: u64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn read_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn save(table: &PseudoDensityTable, path: &Path) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    let p = table.params();
    write_f64(&mut w, p.x_min)?;
    write_f64(&mut w, p.x_max)?;
    write_f64(&mut w, p.x_step)?;
    write_f64(&mut w, p.r_max)?;
    write_u64(&mut w, p.r_cells as u64)?;
    write_u64(&mut w, p.quantile_points as u64)?;
    let all = table.slices().iter().chain(table.guard_slices());
    write_u64(
        &mut w,
        (table.slices().len() + table.guard_slices().len()) as u64,
    )?;
    for s in all {
        write_f64(&mut w, s.x)?;
        write_f64(&mut w, s.r_max)?;
        write_f64(&mut w, s.norm)?;
        write_f64(&mut w, s.zeroth_moment)?;
        write_u64(&mut w, s.f.len() as u64)?;
        for &v in &s.f {
            write_f64(&mut w, v)?;
        }
    }
    w.flush()
}

/// Returns Ok(None) when the file is missing, malformed, or was built with
/// different parameters (a silent rebuild is the right response to all of
/// those).
pub fn load(path: &Path, params: &TableParams) -> io::Result<Option<PseudoDensityTable>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e),
    };
    let mut r = BufReader::new(file);
    let mut magic = [0u8; 8];
    if r.read_exact(&mut magic).is_err() || &magic != MAGIC {
        return Ok(None);
    }
    let stored = TableParams {
        x_min: read_f64(&mut r)?,
        x_max: read_f64(&mut r)?,
        x_step: read_f64(&mut r)?,
        r_max: read_f64(&mut r)?,
        r_cells: read_u64(&mut r)? as usize,
        quantile_points: read_u64(&mut r)? as usize,
    };
    if stored != *params {
        return Ok(None);
    }
    let n_slices = read_u64(&mut r)? as usize;
    if n_slices != PseudoDensityTable::grid_positions(params).len() {
        return Ok(None);
    }
    let mut slices = Vec::with_capacity(n_slices);
    for _ in 0..n_slices {
        let x = read_f64(&mut r)?;
        let r_max = read_f64(&mut r)?;
        let norm = read_f64(&mut r)?;
        let zeroth = read_f64(&mut r)?;
        let len = read_u64(&mut r)? as usize;
        if len > (1 << 24) {
            return Ok(None);
        }
        let mut f = Vec::with_capacity(len);
        for _ in 0..len {
            f.push(read_f64(&mut r)?);
        }
        slices.push(TableSlice::from_parts(
            x,
            r_max,
            f,
            norm,
            zeroth,
            params.quantile_points,
        ));
    }
    match PseudoDensityTable::from_slices(*params, slices) {
        Ok(t) => Ok(Some(t)),
        Err(_) => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_params() -> TableParams {
        TableParams {
            x_min: -1.0,
            x_max: 1.0,
            x_step: 0.5,
            r_cells: 256,
            quantile_points: 128,
            ..TableParams::default()
        }
    }

    #[test]
    fn cache_round_trip_is_exact() {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let params = tiny_params();
        let table = build_parallel(&params, &pool);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("table.bin");
        save(&table, &path).unwrap();
        let loaded = load(&path, &params).unwrap().expect("cache hit");
        let all = |t: &PseudoDensityTable| {
            t.slices()
                .iter()
                .chain(t.guard_slices())
                .cloned()
                .collect::<Vec<_>>()
        };
        for (a, b) in all(&table).iter().zip(&all(&loaded)) {
            assert_eq!(a.f, b.f);
            assert_eq!(a.norm, b.norm);
            assert_eq!(a.cdf, b.cdf);
            assert_eq!(a.quantiles, b.quantiles);
        }
    }

    #[test]
    fn parameter_mismatch_misses() {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let params = tiny_params();
        let table = build_parallel(&params, &pool);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("table.bin");
        save(&table, &path).unwrap();
        let other = TableParams {
            x_step: 0.25,
            ..params
        };
        assert!(load(&path, &other).unwrap().is_none());
        assert!(load(&dir.path().join("missing.bin"), &params)
            .unwrap()
            .is_none());
    }

    #[test]
    fn parallel_build_matches_serial() {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let params = tiny_params();
        let par = build_parallel(&params, &pool);
        let ser = PseudoDensityTable::build(params);
        for (a, b) in par.slices().iter().zip(ser.slices()) {
            assert_eq!(a.f, b.f);
            assert_eq!(a.norm, b.norm);
        }
    }
}
