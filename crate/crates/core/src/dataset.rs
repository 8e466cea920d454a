//! Dataset containers, standardization, and CSV I/O.
//!
//! A dataset is one treatment column `Z`, `K` mediator columns, and one
//! outcome column `R`, all over the same `n` observations. Fitting operates on
//! the standardized scale (every column centered to mean 0 and scaled to unit
//! sample variance); [`StandardizedDataset`] keeps the centers and scales so
//! estimates can be mapped back to raw units.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::model::PathwayCoefficients;

/// Raw observations: treatment `z` (n), mediators `m` (n×K), outcome `r` (n).
#[derive(Debug, Clone)]
pub struct MediationDataset {
    z: Array1<f64>,
    m: Array2<f64>,
    r: Array1<f64>,
    /// Mediator column labels; `None` means the defaults `M1..MK`.
    mediator_names: Option<Vec<String>>,
}

impl MediationDataset {
    /// Builds a dataset, validating shapes and values: `n >= 3`, `K >= 1`,
    /// everything finite, and a non-constant treatment.
    pub fn new(
        z: Array1<f64>,
        m: Array2<f64>,
        r: Array1<f64>,
        mediator_names: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = z.len();
        if m.nrows() != n || r.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "z has {} rows, m has {}, r has {}",
                n,
                m.nrows(),
                r.len()
            )));
        }
        if n < 3 {
            return Err(Error::InvalidData(format!(
                "need at least 3 observations, got {}",
                n
            )));
        }
        let k = m.ncols();
        if k < 1 {
            return Err(Error::InvalidData("need at least one mediator".into()));
        }
        if let Some(names) = &mediator_names {
            if names.len() != k {
                return Err(Error::DimensionMismatch(format!(
                    "{} mediator names for {} mediators",
                    names.len(),
                    k
                )));
            }
        }
        if z.iter().any(|v| !v.is_finite())
            || m.iter().any(|v| !v.is_finite())
            || r.iter().any(|v| !v.is_finite())
        {
            return Err(Error::InvalidData("non-finite value in dataset".into()));
        }
        let z0 = z[0];
        if z.iter().all(|&v| v == z0) {
            return Err(Error::ConstantColumn("Z".into()));
        }
        Ok(Self {
            z,
            m,
            r,
            mediator_names,
        })
    }

    /// Internal constructor for rows that are already on some common scale
    /// (CV folds, bootstrap resamples); checks shapes but not the `n >= 3` /
    /// non-constant rules, which the caller handles.
    pub(crate) fn from_parts_unchecked(
        z: Array1<f64>,
        m: Array2<f64>,
        r: Array1<f64>,
        mediator_names: Option<Vec<String>>,
    ) -> Self {
        debug_assert_eq!(z.len(), m.nrows());
        debug_assert_eq!(z.len(), r.len());
        Self {
            z,
            m,
            r,
            mediator_names,
        }
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.z.len()
    }

    /// Number of mediators.
    pub fn k(&self) -> usize {
        self.m.ncols()
    }

    pub fn z(&self) -> &Array1<f64> {
        &self.z
    }

    pub fn m(&self) -> &Array2<f64> {
        &self.m
    }

    pub fn r(&self) -> &Array1<f64> {
        &self.r
    }

    /// Mediator labels: the stored names, or `M1..MK`.
    pub fn mediator_names(&self) -> Vec<String> {
        match &self.mediator_names {
            Some(names) => names.clone(),
            None => (1..=self.k()).map(|j| format!("M{}", j)).collect(),
        }
    }

    /// Reads a dataset from CSV: header row with a `Z` column, an `R` column,
    /// and every other column taken as a mediator (in header order).
    pub fn from_csv_reader<T: Read>(reader: T) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = csv.headers()?.clone();
        let mut z_idx = None;
        let mut r_idx = None;
        let mut med_cols: Vec<(usize, String)> = Vec::new();
        for (i, name) in headers.iter().enumerate() {
            match name.trim() {
                "Z" => {
                    if z_idx.replace(i).is_some() {
                        return Err(Error::InvalidData("duplicate Z column".into()));
                    }
                }
                "R" => {
                    if r_idx.replace(i).is_some() {
                        return Err(Error::InvalidData("duplicate R column".into()));
                    }
                }
                other => med_cols.push((i, other.to_string())),
            }
        }
        let z_idx = z_idx.ok_or_else(|| Error::InvalidData("missing Z column".into()))?;
        let r_idx = r_idx.ok_or_else(|| Error::InvalidData("missing R column".into()))?;
        if med_cols.is_empty() {
            return Err(Error::InvalidData("no mediator columns".into()));
        }

        let mut z = Vec::new();
        let mut r = Vec::new();
        let mut m_rows: Vec<f64> = Vec::new();
        for record in csv.records() {
            let record = record?;
            let row_no = z.len() + 2; // 1-based, counting the header line
            let parse = |idx: usize| -> Result<f64> {
                let field = record
                    .get(idx)
                    .ok_or_else(|| Error::InvalidData(format!("row {} too short", row_no)))?;
                field.trim().parse::<f64>().map_err(|_| {
                    Error::InvalidData(format!(
                        "cannot parse '{}' as a number (row {})",
                        field, row_no
                    ))
                })
            };
            z.push(parse(z_idx)?);
            r.push(parse(r_idx)?);
            for (idx, _) in &med_cols {
                m_rows.push(parse(*idx)?);
            }
        }
        let n = z.len();
        let k = med_cols.len();
        let m = Array2::from_shape_vec((n, k), m_rows)
            .map_err(|e| Error::InvalidData(format!("bad mediator block shape: {}", e)))?;
        let names: Vec<String> = med_cols.into_iter().map(|(_, name)| name).collect();
        Self::new(Array1::from(z), m, Array1::from(r), Some(names))
    }

    /// Reads a dataset from a CSV file.
    pub fn from_csv_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_csv_reader(File::open(path)?)
    }

    /// Writes the dataset as CSV with header `Z, <mediators...>, R`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        let mut header = vec!["Z".to_string()];
        header.extend(self.mediator_names());
        header.push("R".to_string());
        csv.write_record(&header)?;
        for i in 0..self.n() {
            let mut row = Vec::with_capacity(self.k() + 2);
            row.push(format_float(self.z[i]));
            for j in 0..self.k() {
                row.push(format_float(self.m[[i, j]]));
            }
            row.push(format_float(self.r[i]));
            csv.write_record(&row)?;
        }
        csv.flush()?;
        Ok(())
    }

    /// Writes the dataset to a CSV file.
    pub fn to_csv_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.write_csv(File::create(path)?)
    }
}

/// Round-trippable float formatting for all CSV output in this crate.
pub(crate) fn format_float(v: f64) -> String {
    // Shortest representation that parses back to the same f64.
    format!("{}", v)
}

/// A dataset on the standardized scale plus the centers/scales that produced
/// it, so coefficients can be mapped back to raw units.
#[derive(Debug, Clone)]
pub struct StandardizedDataset {
    data: MediationDataset,
    z_center: f64,
    z_scale: f64,
    m_centers: Array1<f64>,
    m_scales: Array1<f64>,
    r_center: f64,
    r_scale: f64,
}

/// Centers every column to mean 0 and scales to unit sample variance
/// (denominator `n - 1`).
///
/// Errors with the offending column's name if any column is constant.
pub fn standardize(dataset: &MediationDataset) -> Result<StandardizedDataset> {
    let n = dataset.n() as f64;
    let names = dataset.mediator_names();
    let stats = |col: ndarray::ArrayView1<f64>, name: &str| -> Result<(f64, f64)> {
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        if var <= 0.0 {
            return Err(Error::ConstantColumn(name.to_string()));
        }
        Ok((mean, var.sqrt()))
    };

    let (z_center, z_scale) = stats(dataset.z().view(), "Z")?;
    let (r_center, r_scale) = stats(dataset.r().view(), "R")?;
    let mut m_centers = Array1::zeros(dataset.k());
    let mut m_scales = Array1::zeros(dataset.k());
    for j in 0..dataset.k() {
        let (c, s) = stats(dataset.m().column(j), &names[j])?;
        m_centers[j] = c;
        m_scales[j] = s;
    }

    let z = dataset.z().mapv(|v| (v - z_center) / z_scale);
    let r = dataset.r().mapv(|v| (v - r_center) / r_scale);
    let mut m = dataset.m().clone();
    for j in 0..dataset.k() {
        let mut col = m.column_mut(j);
        col.mapv_inplace(|v| (v - m_centers[j]) / m_scales[j]);
    }

    Ok(StandardizedDataset {
        data: MediationDataset::from_parts_unchecked(
            z,
            m,
            r,
            dataset.mediator_names.clone(),
        ),
        z_center,
        z_scale,
        m_centers,
        m_scales,
        r_center,
        r_scale,
    })
}

impl StandardizedDataset {
    /// The standardized observations.
    pub fn data(&self) -> &MediationDataset {
        &self.data
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    pub fn k(&self) -> usize {
        self.data.k()
    }

    pub fn z_center(&self) -> f64 {
        self.z_center
    }

    pub fn z_scale(&self) -> f64 {
        self.z_scale
    }

    pub fn m_centers(&self) -> &Array1<f64> {
        &self.m_centers
    }

    pub fn m_scales(&self) -> &Array1<f64> {
        &self.m_scales
    }

    pub fn r_center(&self) -> f64 {
        self.r_center
    }

    pub fn r_scale(&self) -> f64 {
        self.r_scale
    }

    /// Wraps rows that are already on this dataset's standardized scale
    /// (a CV fold complement or a bootstrap resample). Exact zero means /
    /// unit variances are not re-imposed: subsets of standardized data are
    /// only approximately standardized, which is what fitting expects.
    pub(crate) fn with_rows(&self, rows: &[usize]) -> StandardizedDataset {
        let z = Array1::from_iter(rows.iter().map(|&i| self.data.z[i]));
        let r = Array1::from_iter(rows.iter().map(|&i| self.data.r[i]));
        let mut m = Array2::zeros((rows.len(), self.k()));
        for (out_i, &i) in rows.iter().enumerate() {
            m.row_mut(out_i).assign(&self.data.m.row(i));
        }
        StandardizedDataset {
            data: MediationDataset::from_parts_unchecked(
                z,
                m,
                r,
                self.data.mediator_names.clone(),
            ),
            ..self.clone()
        }
    }

    /// Maps standardized-scale coefficients back to raw units:
    /// `A_raw = A * s_M / s_Z`, `B_raw = B * s_R / s_M`, `C_raw = C * s_R / s_Z`.
    ///
    /// Pathway products transform as `A_j B_j * s_R / s_Z`, so selection is
    /// unchanged up to the cutoff's scale.
    pub fn coefficients_to_raw(&self, coefs: &PathwayCoefficients) -> PathwayCoefficients {
        let k = self.k();
        assert_eq!(coefs.a.len(), k, "coefficient length must match mediators");
        let mut a = coefs.a.clone();
        let mut b = coefs.b.clone();
        for j in 0..k {
            a[j] *= self.m_scales[j] / self.z_scale;
            b[j] *= self.r_scale / self.m_scales[j];
        }
        let c = coefs.c * self.r_scale / self.z_scale;
        PathwayCoefficients { a, b, c }
    }

    /// The pathway products `A_j B_j` implied by raw-scale coefficients,
    /// expressed on this dataset's standardized scale (`* s_Z / s_R`).
    /// Used to compare estimates against simulation truth.
    pub fn ab_to_standardized(&self, a_raw: &Array1<f64>, b_raw: &Array1<f64>) -> Array1<f64> {
        assert_eq!(a_raw.len(), self.k());
        assert_eq!(b_raw.len(), self.k());
        let factor = self.z_scale / self.r_scale;
        let mut ab = Array1::zeros(self.k());
        for j in 0..self.k() {
            ab[j] = a_raw[j] * b_raw[j] * factor;
        }
        ab
    }
}
