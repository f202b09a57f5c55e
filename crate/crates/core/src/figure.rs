//! Geometry behind the baseline-vs-follow-up scatter figure: per-group
//! points, 99.5% normal-theory ellipses, marginal kernel densities, and
//! per-group regression lines.

use serde::{Deserialize, Serialize};

use crate::dgp::cols;
use crate::error::{LabError, Result};
use crate::harness::percentile;
use crate::scm::Dataset;

pub const COVERAGE_LEVEL: f64 = 0.995;
pub const ELLIPSE_VERTICES: usize = 256;
pub const DENSITY_GRID: usize = 512;
pub const MIN_GROUP_SIZE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Girl,
    Boy,
}

impl Group {
    pub const BOTH: [Group; 2] = [Group::Girl, Group::Boy];

    pub fn of(x: f64) -> Group {
        if x > 0.0 {
            Group::Boy
        } else {
            Group::Girl
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Girl => "girl",
            Group::Boy => "boy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Y0,
    Y1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub y0: f64,
    pub y1: f64,
    pub group: Group,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub group: Group,
    pub center: [f64; 2],
    pub covariance: [[f64; 2]; 2],
    pub coverage_level: f64,
    /// Closed polyline: the last vertex repeats the first.
    pub boundary: Vec<[f64; 2]>,
}

impl Ellipse {
    /// Squared Mahalanobis radius of the coverage level.
    pub fn radius_sq(&self) -> f64 {
        chi2_2df_quantile(self.coverage_level)
    }

    pub fn mahalanobis_sq(&self, p: [f64; 2]) -> f64 {
        let [[a, b], [_, d]] = self.covariance;
        let det = a * d - b * b;
        let (dx, dy) = (p[0] - self.center[0], p[1] - self.center[1]);
        (d * dx * dx - 2.0 * b * dx * dy + a * dy * dy) / det
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.mahalanobis_sq(p) <= self.radius_sq()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub group: Group,
    pub axis: Axis,
    pub bandwidth: f64,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
}

impl Density {
    pub fn trapezoid_integral(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegLine {
    pub group: Group,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure3Bundle {
    pub points: Vec<Point>,
    pub ellipses: Vec<Ellipse>,
    pub densities: Vec<Density>,
    pub reglines: Vec<RegLine>,
    pub identity_line: bool,
}

/// Quantile of the chi-square distribution with two degrees of freedom.
pub fn chi2_2df_quantile(p: f64) -> f64 {
    -2.0 * (1.0 - p).ln()
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Rule-of-thumb bandwidth `0.9 * min(sd, IQR/1.34) * n^(-1/5)`. When one
/// of the spread measures is zero the other is used.
pub fn rule_of_thumb_bandwidth(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let sd = sample_sd(values);
    let iqr = (percentile(&sorted, 0.75) - percentile(&sorted, 0.25)) / 1.34;
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr),
        (true, false) => sd,
        (false, true) => iqr,
        (false, false) => 0.0,
    };
    0.9 * spread * (values.len() as f64).powf(-0.2)
}

/// Gaussian-kernel density on `DENSITY_GRID` points spanning the data
/// range padded by three bandwidths.
pub fn kernel_density(values: &[f64], group: Group, axis: Axis) -> Result<Density> {
    let bw = rule_of_thumb_bandwidth(values);
    if bw.is_nan() || bw <= 0.0 {
        return Err(LabError::ZeroVariance(format!("{axis:?} for {}", group.as_str())));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (start, end) = (lo - 3.0 * bw, hi + 3.0 * bw);
    let step = (end - start) / (DENSITY_GRID - 1) as f64;
    let grid: Vec<f64> = (0..DENSITY_GRID).map(|i| start + step * i as f64).collect();
    let norm = 1.0 / (values.len() as f64 * bw * (2.0 * std::f64::consts::PI).sqrt());
    let density = grid
        .iter()
        .map(|&g| {
            norm * values
                .iter()
                .map(|&v| {
                    let z = (g - v) / bw;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
        })
        .collect();
    Ok(Density {
        group,
        axis,
        bandwidth: bw,
        grid,
        density,
    })
}

/// Ellipse enclosing `level` of a bivariate normal with the sample mean and
/// covariance of (`a`, `b`).
pub fn normal_ellipse(a: &[f64], b: &[f64], group: Group, level: f64) -> Ellipse {
    let n = a.len() as f64;
    let (ma, mb) = (mean(a), mean(b));
    let (mut saa, mut sab, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        saa += (x - ma) * (x - ma);
        sab += (x - ma) * (y - mb);
        sbb += (y - mb) * (y - mb);
    }
    let cov = [[saa / (n - 1.0), sab / (n - 1.0)], [sab / (n - 1.0), sbb / (n - 1.0)]];
    let r = chi2_2df_quantile(level).sqrt();
    // Cholesky factor of the covariance maps the unit circle onto the ellipse.
    let l11 = cov[0][0].max(0.0).sqrt();
    let l21 = if l11 > 0.0 { cov[0][1] / l11 } else { 0.0 };
    let l22 = (cov[1][1] - l21 * l21).max(0.0).sqrt();
    let mut boundary: Vec<[f64; 2]> = (0..ELLIPSE_VERTICES)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / ELLIPSE_VERTICES as f64;
            let (u, v) = (r * t.cos(), r * t.sin());
            [ma + l11 * u, mb + l21 * u + l22 * v]
        })
        .collect();
    boundary.push(boundary[0]);
    Ellipse {
        group,
        center: [ma, mb],
        covariance: cov,
        coverage_level: level,
        boundary,
    }
}

fn simple_regression(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if sxx <= 0.0 {
        return Err(LabError::ZeroVariance(cols::Y0.to_string()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Builds the full figure bundle from a natural-unit dataset.
pub fn figure3_data(ds: &Dataset) -> Result<Figure3Bundle> {
    let x = ds.column(cols::X)?;
    let y0 = ds.column(cols::Y0)?;
    let y1 = ds.column(cols::Y1)?;
    let points: Vec<Point> = (0..ds.n())
        .map(|i| Point {
            y0: y0[i],
            y1: y1[i],
            group: Group::of(x[i]),
        })
        .collect();

    let mut ellipses = Vec::new();
    let mut densities = Vec::new();
    let mut reglines = Vec::new();
    for group in Group::BOTH {
        let (a, b): (Vec<f64>, Vec<f64>) = points
            .iter()
            .filter(|p| p.group == group)
            .map(|p| (p.y0, p.y1))
            .unzip();
        if a.len() < MIN_GROUP_SIZE {
            return Err(LabError::SmallGroup {
                group: group.as_str(),
                n: a.len(),
                min: MIN_GROUP_SIZE,
            });
        }
        ellipses.push(normal_ellipse(&a, &b, group, COVERAGE_LEVEL));
        densities.push(kernel_density(&a, group, Axis::Y0)?);
        densities.push(kernel_density(&b, group, Axis::Y1)?);
        let (slope, intercept) = simple_regression(&a, &b)?;
        reglines.push(RegLine {
            group,
            slope,
            intercept,
        });
    }
    Ok(Figure3Bundle {
        points,
        ellipses,
        densities,
        reglines,
        identity_line: true,
    })
}

/// Fraction of a group's points inside that group's ellipse.
pub fn empirical_coverage(bundle: &Figure3Bundle, group: Group) -> f64 {
    let Some(e) = bundle.ellipses.iter().find(|e| e.group == group) else {
        return f64::NAN;
    };
    let pts: Vec<&Point> = bundle.points.iter().filter(|p| p.group == group).collect();
    let inside = pts.iter().filter(|p| e.contains([p.y0, p.y1])).count();
    inside as f64 / pts.len() as f64
}

/// True when a closed polyline turns consistently in one direction.
pub fn is_convex_closed(poly: &[[f64; 2]]) -> bool {
    if poly.len() < 4 || poly.first() != poly.last() {
        return false;
    }
    let ring = &poly[..poly.len() - 1];
    let k = ring.len();
    let mut sign = 0.0;
    for i in 0..k {
        let (a, b, c) = (ring[i], ring[(i + 1) % k], ring[(i + 2) % k]);
        let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
        if cross == 0.0 {
            continue;
        }
        if sign == 0.0 {
            sign = cross.signum();
        } else if cross.signum() != sign {
            return false;
        }
    }
    sign != 0.0
}

/// `figure3_points.csv`: y0,y1,group.
pub fn points_csv(bundle: &Figure3Bundle) -> String {
    let mut out = String::from("y0,y1,group\n");
    for p in &bundle.points {
        out.push_str(&format!("{},{},{}\n", p.y0, p.y1, p.group.as_str()));
    }
    out
}

/// `figure3_ellipses.csv`: group,vertex_index,y0,y1.
pub fn ellipses_csv(bundle: &Figure3Bundle) -> String {
    let mut out = String::from("group,vertex_index,y0,y1\n");
    for e in &bundle.ellipses {
        for (i, v) in e.boundary.iter().enumerate() {
            out.push_str(&format!("{},{},{},{}\n", e.group.as_str(), i, v[0], v[1]));
        }
    }
    out
}

/// `figure3_density_{x|y}.csv` for one axis: group,grid,density.
pub fn density_csv(bundle: &Figure3Bundle, axis: Axis) -> String {
    let mut out = String::from("group,grid,density\n");
    for d in bundle.densities.iter().filter(|d| d.axis == axis) {
        for (g, v) in d.grid.iter().zip(&d.density) {
            out.push_str(&format!("{},{},{}\n", d.group.as_str(), g, v));
        }
    }
    out
}
