use std::str::FromStr;

/// One grid axis: a single value or an inclusive linspace `start:end:count`.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis(Vec<f64>);

impl Axis {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("not finite: {s:?}"))
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [v] => Ok(Axis(vec![number(v)?])),
            [a, b, n] => {
                let (a, b) = (number(a)?, number(b)?);
                let n: usize = n.trim().parse().map_err(|_| format!("bad count in {s:?}"))?;
                match n {
                    0 => Err("count must be at least 1".into()),
                    1 => Ok(Axis(vec![a])),
                    _ => Ok(Axis((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())),
                }
            }
            _ => Err(format!("expected VALUE or START:END:COUNT, got {s:?}")),
        }
    }
}

/// Row-major `(t, x)` points, `t` outermost.
pub fn points(t: &Axis, x: &Axis) -> Vec<(f64, f64)> {
    t.values().iter().flat_map(|&t| x.values().iter().map(move |&x| (t, x))).collect()
}
