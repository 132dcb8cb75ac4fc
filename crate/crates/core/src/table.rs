use crate::error::{parameter, Error, Result};

/// Piecewise-linear interpolant through nondecreasing data.
///
/// Abscissae are strictly increasing and ordinates nondecreasing; outside
/// the tabulated range the end values are held constant.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl MonotoneTable {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return parameter(format!(
                "table columns differ in length ({} vs {})",
                xs.len(),
                ys.len()
            ));
        }
        if xs.len() < 2 {
            return parameter("a table needs at least two rows");
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return parameter("table contains non-finite entries");
        }
        if let Some(w) = xs.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Precondition(format!(
                "table abscissae must be strictly increasing ({} followed by {})",
                w[0], w[1]
            )));
        }
        if let Some(w) = ys.windows(2).find(|w| w[1] < w[0]) {
            return Err(Error::Precondition(format!(
                "table values must be nondecreasing ({} followed by {})",
                w[0], w[1]
            )));
        }
        Ok(Self { xs, ys })
    }

    /// Reads a two-column CSV (`x,y` per line, optional header).
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
                return Err(Error::Parse(format!(
                    "line {}: expected two columns",
                    lineno + 1
                )));
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => {
                    xs.push(x);
                    ys.push(y);
                }
                _ if xs.is_empty() && lineno == 0 => continue, // header
                _ => {
                    return Err(Error::Parse(format!(
                        "line {}: non-numeric entry `{line}`",
                        lineno + 1
                    )))
                }
            }
        }
        Self::new(xs, ys)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn first(&self) -> (f64, f64) {
        (self.xs[0], self.ys[0])
    }

    pub fn last(&self) -> (f64, f64) {
        let n = self.xs.len() - 1;
        (self.xs[n], self.ys[n])
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let k = self.xs.partition_point(|&v| v <= x);
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        let (y0, y1) = (self.ys[k - 1], self.ys[k]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}
