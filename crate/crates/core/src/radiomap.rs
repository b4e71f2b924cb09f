//! Grid radio data: ingestion of receiver-grid exports, gap repair, rescaling
//! and conversion of mean SINR into the per-cell outage map the trajectory
//! environment consumes.
//!
//! Two line-oriented text formats are supported and must round-trip exactly:
//!
//! ```text
//! GRID v1 <cols> <rows> <spacing_m> <origin_x> <origin_y>
//! <rows lines of cols whitespace-separated dB values, `NA` = missing>
//! ```
//!
//! and the same layout with header tag `OUTAGE v1` for outage probabilities
//! in `[0, 1]` (no `NA` permitted).

use crate::error::{Error, Result};
use crate::geo::Point2;
use crate::scalar::Real;

/// Receiver grid as exported, possibly with missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct RawGrid<F> {
    pub cols: usize,
    pub rows: usize,
    pub spacing_m: F,
    pub origin: Point2<F>,
    /// Row-major; `None` marks a missing cell.
    pub values: Vec<Option<F>>,
}

/// Gap-free SINR grid in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrGrid<F> {
    pub cols: usize,
    pub rows: usize,
    pub spacing_m: F,
    pub origin: Point2<F>,
    pub values: Vec<F>,
}

/// Per-cell outage probability at UAV altitude.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageMap<F> {
    pub cols: usize,
    pub rows: usize,
    pub cell_size_m: F,
    pub origin: Point2<F>,
    pub values: Vec<F>,
}

impl<F: Real> RawGrid<F> {
    pub fn new(
        cols: usize,
        rows: usize,
        spacing_m: F,
        origin: Point2<F>,
        values: Vec<Option<F>>,
    ) -> Result<Self> {
        if cols == 0 || rows == 0 {
            return Err(Error::Data("grid dimensions must be positive".into()));
        }
        if spacing_m <= F::zero() || !spacing_m.is_finite() {
            return Err(Error::Data("grid spacing must be positive and finite".into()));
        }
        if values.len() != cols * rows {
            return Err(Error::Data(format!(
                "grid dimension mismatch: {}x{} declares {} cells, found {}",
                cols,
                rows,
                cols * rows,
                values.len()
            )));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Data("grid values must be finite".into()));
        }
        Ok(RawGrid { cols, rows, spacing_m, origin, values })
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// Canonical text form (`GRID v1`).
    pub fn to_file_string(&self) -> String {
        write_grid_body("GRID", self.cols, self.rows, self.spacing_m, self.origin, |i| {
            self.values[i]
        })
    }
}

impl<F: Real> SinrGrid<F> {
    pub fn new(cols: usize, rows: usize, spacing_m: F, origin: Point2<F>, values: Vec<F>) -> Result<Self> {
        let raw = RawGrid::new(cols, rows, spacing_m, origin, values.iter().copied().map(Some).collect())?;
        if raw.missing_count() != 0 {
            unreachable!();
        }
        Ok(SinrGrid { cols, rows, spacing_m, origin, values })
    }

    pub fn min_max(&self) -> (F, F) {
        let mut lo = F::infinity();
        let mut hi = F::neg_infinity();
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    pub fn to_file_string(&self) -> String {
        write_grid_body("GRID", self.cols, self.rows, self.spacing_m, self.origin, |i| {
            Some(self.values[i])
        })
    }
}

impl<F: Real> OutageMap<F> {
    pub fn new(cols: usize, rows: usize, cell_size_m: F, origin: Point2<F>, values: Vec<F>) -> Result<Self> {
        if cols == 0 || rows == 0 {
            return Err(Error::Data("outage map dimensions must be positive".into()));
        }
        if cell_size_m <= F::zero() || !cell_size_m.is_finite() {
            return Err(Error::Data("outage map cell size must be positive and finite".into()));
        }
        if values.len() != cols * rows {
            return Err(Error::Data(format!(
                "outage map dimension mismatch: {}x{} declares {} cells, found {}",
                cols,
                rows,
                cols * rows,
                values.len()
            )));
        }
        if values.iter().any(|v| !(*v >= F::zero() && *v <= F::one())) {
            return Err(Error::Data("outage values must lie in [0, 1]".into()));
        }
        Ok(OutageMap { cols, rows, cell_size_m, origin, values })
    }

    pub fn width_m(&self) -> F {
        F::of(self.cols as f64) * self.cell_size_m
    }

    pub fn height_m(&self) -> F {
        F::of(self.rows as f64) * self.cell_size_m
    }

    pub fn value(&self, row: usize, col: usize) -> F {
        self.values[row * self.cols + col]
    }

    /// Centre of cell `(row, col)` in map coordinates.
    pub fn cell_center(&self, row: usize, col: usize) -> Point2<F> {
        let half = F::of(0.5);
        Point2::new(
            self.origin.x + (F::of(col as f64) + half) * self.cell_size_m,
            self.origin.y + (F::of(row as f64) + half) * self.cell_size_m,
        )
    }

    /// Cell index containing `pos`. Positions exactly on a shared cell edge
    /// resolve to the lower index; the outer boundary belongs to its only
    /// adjacent cell.
    pub fn cell_at(&self, pos: &Point2<F>) -> Result<(usize, usize)> {
        let rx = pos.x - self.origin.x;
        let ry = pos.y - self.origin.y;
        let col = axis_cell(rx, self.cell_size_m, self.cols)
            .ok_or_else(|| Error::Domain(format!("position x={} outside map extent", pos.x)))?;
        let row = axis_cell(ry, self.cell_size_m, self.rows)
            .ok_or_else(|| Error::Domain(format!("position y={} outside map extent", pos.y)))?;
        Ok((row, col))
    }

    /// Outage probability of the cell containing `pos`.
    pub fn value_at(&self, pos: &Point2<F>) -> Result<F> {
        let (row, col) = self.cell_at(pos)?;
        Ok(self.value(row, col))
    }

    /// Canonical text form (`OUTAGE v1`).
    pub fn to_file_string(&self) -> String {
        write_grid_body("OUTAGE", self.cols, self.rows, self.cell_size_m, self.origin, |i| {
            Some(self.values[i])
        })
    }
}

fn axis_cell<F: Real>(rel: F, cell: F, n: usize) -> Option<usize> {
    if !(rel >= F::zero() && rel <= cell * F::of(n as f64)) {
        return None;
    }
    let idx = (rel / cell).ceil().to64() as isize - 1;
    Some(idx.clamp(0, n as isize - 1) as usize)
}

fn write_grid_body<F: Real>(
    tag: &str,
    cols: usize,
    rows: usize,
    spacing: F,
    origin: Point2<F>,
    value: impl Fn(usize) -> Option<F>,
) -> String {
    let mut out = String::new();
    out.push_str(&format!("{tag} v1 {cols} {rows} {spacing} {} {}\n", origin.x, origin.y));
    for r in 0..rows {
        for c in 0..cols {
            if c > 0 {
                out.push(' ');
            }
            match value(r * cols + c) {
                Some(v) => out.push_str(&v.to_string()),
                None => out.push_str("NA"),
            }
        }
        out.push('\n');
    }
    out
}

struct Header<F> {
    cols: usize,
    rows: usize,
    spacing: F,
    origin: Point2<F>,
}

fn parse_header<F: Real>(line: &str, tag: &str) -> Result<Header<F>> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.len() != 7 || tokens[0] != tag || tokens[1] != "v1" {
        return Err(Error::parse(1, 1, format!("malformed header, expected `{tag} v1 <cols> <rows> <spacing> <ox> <oy>`")));
    }
    let dim = |i: usize, name: &str| -> Result<usize> {
        let n: usize = tokens[i]
            .parse()
            .map_err(|_| Error::parse(1, i + 1, format!("{name} is not a positive integer")))?;
        if n == 0 {
            return Err(Error::parse(1, i + 1, format!("{name} must be positive")));
        }
        Ok(n)
    };
    let num = |i: usize, name: &str| -> Result<f64> {
        let v: f64 = tokens[i]
            .parse()
            .map_err(|_| Error::parse(1, i + 1, format!("{name} is not a number")))?;
        if !v.is_finite() {
            return Err(Error::parse(1, i + 1, format!("{name} must be finite")));
        }
        Ok(v)
    };
    let cols = dim(2, "cols")?;
    let rows = dim(3, "rows")?;
    let spacing = num(4, "spacing")?;
    if spacing <= 0.0 {
        return Err(Error::parse(1, 5, "spacing must be positive"));
    }
    let ox = num(5, "origin_x")?;
    let oy = num(6, "origin_y")?;
    Ok(Header { cols, rows, spacing: F::of(spacing), origin: Point2::new(F::of(ox), F::of(oy)) })
}

fn parse_body<F: Real>(
    bytes: &[u8],
    tag: &str,
    allow_missing: bool,
) -> Result<(Header<F>, Vec<Option<F>>)> {
    let text = std::str::from_utf8(bytes).map_err(|_| Error::parse(1, 1, "file is not valid UTF-8"))?;
    let mut lines = text.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::parse(1, 1, "empty file"))?;
    let header = parse_header::<F>(first, tag)?;

    let mut values: Vec<Option<F>> = Vec::with_capacity(header.cols * header.rows);
    let mut data_rows = 0usize;
    for (lineno, line) in lines {
        let line_1 = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        if data_rows == header.rows {
            return Err(Error::parse(
                line_1,
                1,
                format!("dimension mismatch: header declares {} rows, found more data", header.rows),
            ));
        }
        let mut count = 0usize;
        for (i, tok) in line.split_whitespace().enumerate() {
            let col_1 = i + 1;
            if count == header.cols {
                return Err(Error::parse(
                    line_1,
                    col_1,
                    format!("dimension mismatch: header declares {} cols, found more values", header.cols),
                ));
            }
            if tok == "NA" {
                if !allow_missing {
                    return Err(Error::parse(line_1, col_1, "missing values are not permitted here"));
                }
                values.push(None);
            } else {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| Error::parse(line_1, col_1, format!("unparsable cell `{tok}`")))?;
                if !v.is_finite() {
                    return Err(Error::parse(line_1, col_1, "cell value must be finite"));
                }
                values.push(Some(F::of(v)));
            }
            count += 1;
        }
        if count != header.cols {
            return Err(Error::parse(
                line_1,
                count + 1,
                format!("dimension mismatch: header declares {} cols, found {count}", header.cols),
            ));
        }
        data_rows += 1;
    }
    if data_rows != header.rows {
        return Err(Error::parse(
            data_rows + 1,
            1,
            format!("dimension mismatch: header declares {} rows, found {data_rows}", header.rows),
        ));
    }
    Ok((header, values))
}

/// Parse a `GRID v1` file.
pub fn parse_grid_file<F: Real>(bytes: &[u8]) -> Result<RawGrid<F>> {
    let (h, values) = parse_body::<F>(bytes, "GRID", true)?;
    RawGrid::new(h.cols, h.rows, h.spacing, h.origin, values)
}

/// Parse an `OUTAGE v1` file; values must lie in `[0, 1]` and none missing.
pub fn parse_outage_file<F: Real>(bytes: &[u8]) -> Result<OutageMap<F>> {
    let (h, values) = parse_body::<F>(bytes, "OUTAGE", false)?;
    let values: Vec<F> = values.into_iter().map(|v| v.unwrap()).collect();
    OutageMap::new(h.cols, h.rows, h.spacing, h.origin, values)
}

/// Median of a non-empty set; an even-sized set yields the mean of the two
/// central values.
fn median<F: Real>(mut vals: Vec<F>) -> F {
    vals.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = vals.len();
    if n % 2 == 1 {
        vals[n / 2]
    } else {
        (vals[n / 2 - 1] + vals[n / 2]) / F::of(2.0)
    }
}

/// Fill missing cells with the median of their 8-neighbourhood, sweeping in
/// passes until no gaps remain. Each pass only reads values present at the
/// start of that pass, so the result is independent of scan order. Should a
/// pass make no progress (no missing cell has a present neighbour), the
/// remaining gaps take the global median of all present values.
pub fn median_fill<F: Real>(g: &RawGrid<F>) -> Result<SinrGrid<F>> {
    let present = g.values.len() - g.missing_count();
    if present == 0 {
        return Err(Error::Data("cannot fill a grid with no present values".into()));
    }
    let (cols, rows) = (g.cols, g.rows);
    let mut vals = g.values.clone();
    let mut missing = g.missing_count();
    while missing > 0 {
        let snapshot = vals.clone();
        let mut filled = 0usize;
        for r in 0..rows {
            for c in 0..cols {
                let idx = r * cols + c;
                if snapshot[idx].is_some() {
                    continue;
                }
                let mut neigh = Vec::with_capacity(8);
                for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        if dr == 0 && dc == 0 {
                            continue;
                        }
                        let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                        if nr < 0 || nc < 0 || nr >= rows as i64 || nc >= cols as i64 {
                            continue;
                        }
                        if let Some(v) = snapshot[nr as usize * cols + nc as usize] {
                            neigh.push(v);
                        }
                    }
                }
                if !neigh.is_empty() {
                    vals[idx] = Some(median(neigh));
                    filled += 1;
                }
            }
        }
        if filled == 0 {
            let global = median(snapshot.iter().flatten().copied().collect());
            for v in vals.iter_mut() {
                if v.is_none() {
                    *v = Some(global);
                }
            }
            missing = 0;
        } else {
            missing -= filled;
        }
    }
    SinrGrid::new(cols, rows, g.spacing_m, g.origin, vals.into_iter().map(|v| v.unwrap()).collect())
}

/// Bilinear resampling in the dB domain onto a `target_cols x target_rows`
/// grid covering the same extent. Sample points sit at cell centres; output
/// values are convex combinations of inputs, so extrema never grow.
pub fn rescale<F: Real>(g: &SinrGrid<F>, target_cols: usize, target_rows: usize) -> Result<SinrGrid<F>> {
    if target_cols == 0 || target_rows == 0 {
        return Err(Error::Usage("rescale target dimensions must be positive".into()));
    }
    let half = F::of(0.5);
    let mut values = Vec::with_capacity(target_cols * target_rows);
    for tr in 0..target_rows {
        let sy = ((F::of(tr as f64) + half) * F::of(g.rows as f64) / F::of(target_rows as f64) - half)
            .max(F::zero())
            .min(F::of((g.rows - 1) as f64));
        let r0 = sy.floor().to64() as usize;
        let r1 = (r0 + 1).min(g.rows - 1);
        let fy = sy - F::of(r0 as f64);
        for tc in 0..target_cols {
            let sx = ((F::of(tc as f64) + half) * F::of(g.cols as f64) / F::of(target_cols as f64) - half)
                .max(F::zero())
                .min(F::of((g.cols - 1) as f64));
            let c0 = sx.floor().to64() as usize;
            let c1 = (c0 + 1).min(g.cols - 1);
            let fx = sx - F::of(c0 as f64);
            let v00 = g.values[r0 * g.cols + c0];
            let v01 = g.values[r0 * g.cols + c1];
            let v10 = g.values[r1 * g.cols + c0];
            let v11 = g.values[r1 * g.cols + c1];
            // Nested lerp is exact on constant grids and at zero fractions.
            let lerp = |a: F, b: F, t: F| a + t * (b - a);
            values.push(lerp(lerp(v00, v01, fx), lerp(v10, v11, fx), fy));
        }
    }
    let spacing = g.spacing_m * F::of(g.cols as f64) / F::of(target_cols as f64);
    SinrGrid::new(target_cols, target_rows, spacing, g.origin, values)
}

/// Convert mean SINR (dB) into outage probability under Rayleigh fading
/// around the mean: `P_out = 1 - exp(-gamma_th / gamma_mean)` in linear
/// units. Strictly decreasing in SINR and inside (0, 1) mathematically;
/// extreme SINR values saturate to 0 or 1 at floating-point precision.
pub fn sinr_to_outage<F: Real>(g: &SinrGrid<F>, gamma_th_db: F) -> Result<OutageMap<F>> {
    if !gamma_th_db.is_finite() {
        return Err(Error::Domain("outage threshold must be finite".into()));
    }
    let ten = F::of(10.0);
    // th_lin / mean_lin, formed in the dB domain.
    let values: Vec<F> = g
        .values
        .iter()
        .map(|&db| F::one() - (-ten.powf((gamma_th_db - db) / ten)).exp())
        .collect();
    OutageMap::new(g.cols, g.rows, g.spacing_m, g.origin, values)
}
