//! Grid evaluation of 2-D models: decision maps and per-neuron responses.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::network::{decide, FFNetwork};

/// What each grid cell records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotTarget {
    Decision,
    L1(usize),
    L2(usize),
}

impl FromStr for PlotTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::param(format!("invalid plot target '{s}', expected decision, l1:K or l2:K"));
        if s == "decision" {
            return Ok(PlotTarget::Decision);
        }
        let (layer, k) = s.split_once(':').ok_or_else(bad)?;
        let k: usize = k.parse().map_err(|_| bad())?;
        match layer {
            "l1" => Ok(PlotTarget::L1(k)),
            "l2" => Ok(PlotTarget::L2(k)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for PlotTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlotTarget::Decision => f.write_str("decision"),
            PlotTarget::L1(k) => write!(f, "l1:{k}"),
            PlotTarget::L2(k) => write!(f, "l2:{k}"),
        }
    }
}

/// Axis-aligned box `[x_min, x_max] x [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotBox {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl FromStr for PlotBox {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::param(format!("invalid box '{s}', expected xmin,xmax,ymin,ymax")))?;
        if v.len() != 4 || !(v[0] < v[1] && v[2] < v[3]) || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::param(format!("invalid box '{s}', expected xmin<xmax and ymin<ymax")));
        }
        Ok(Self {
            x_min: v[0],
            x_max: v[1],
            y_min: v[2],
            y_max: v[3],
        })
    }
}

/// Cell-centered samples of one target. Row `j` holds cells with
/// `y = y_min + (j + 0.5) * dy`, stored row-major from `y_min` upwards.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDump {
    pub bbox: PlotBox,
    pub nx: usize,
    pub ny: usize,
    pub target: PlotTarget,
    pub values: Vec<f64>,
}

impl GridDump {
    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        let b = &self.bbox;
        let x = b.x_min + (i as f64 + 0.5) * (b.x_max - b.x_min) / self.nx as f64;
        let y = b.y_min + (j as f64 + 0.5) * (b.y_max - b.y_min) / self.ny as f64;
        (x, y)
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let fail = |e: csv::Error| Error::format("grid csv", e.to_string());
        w.write_record(["x", "y", "value"]).map_err(fail)?;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let (x, y) = self.cell_center(i, j);
                w.write_record([x.to_string(), y.to_string(), self.value(i, j).to_string()])
                    .map_err(fail)?;
            }
        }
        w.flush().map_err(|e| Error::format("grid csv", e.to_string()))
    }

    /// Binary PPM. Decision maps use [`PALETTE`] by class; neuron maps are
    /// gray levels after min-max normalization over the grid. The top image
    /// row is `y_max`.
    pub fn write_ppm<W: Write>(&self, mut out: W) -> Result<()> {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        let mut bytes = format!("P6\n{} {}\n255\n", self.nx, self.ny).into_bytes();
        for j in (0..self.ny).rev() {
            for i in 0..self.nx {
                let v = self.value(i, j);
                let rgb = match self.target {
                    PlotTarget::Decision => PALETTE[v as usize % PALETTE.len()],
                    _ => {
                        let g = if hi > lo { ((v - lo) / (hi - lo) * 255.0).round() as u8 } else { 0 };
                        [g, g, g]
                    }
                };
                bytes.extend_from_slice(&rgb);
            }
        }
        out.write_all(&bytes).map_err(|e| Error::format("ppm", e.to_string()))
    }
}

/// Class colors, indexed by class.
pub const PALETTE: [[u8; 3]; 8] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [127, 127, 127],
];

/// Evaluates `target` at every cell center.
pub fn grid_dump(net: &FFNetwork, bbox: PlotBox, nx: usize, ny: usize, target: PlotTarget) -> Result<GridDump> {
    if net.dim != 2 {
        return Err(Error::Unsupported(format!("plots need a 2-D model, this one has d = {}", net.dim)));
    }
    if nx == 0 || ny == 0 {
        return Err(Error::param("grid resolution must be at least 1x1"));
    }
    match target {
        PlotTarget::L1(k) if k >= net.d1() => {
            return Err(Error::param(format!("l1 has {} neurons, asked for {k}", net.d1())))
        }
        PlotTarget::L2(k) if k >= net.d2() => {
            return Err(Error::param(format!("l2 has {} neurons, asked for {k}", net.d2())))
        }
        _ => {}
    }
    let mut dump = GridDump {
        bbox,
        nx,
        ny,
        target,
        values: Vec::with_capacity(nx * ny),
    };
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = dump.cell_center(i, j);
            let (logits, trace) = net.forward(&[x, y])?;
            dump.values.push(match target {
                PlotTarget::Decision => decide(&logits, net.fallback_class) as f64,
                PlotTarget::L1(k) => trace.a1[k],
                PlotTarget::L2(k) => trace.a2[k],
            });
        }
    }
    Ok(dump)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_targets_and_boxes() {
        assert_eq!("decision".parse::<PlotTarget>().unwrap(), PlotTarget::Decision);
        assert_eq!("l2:3".parse::<PlotTarget>().unwrap(), PlotTarget::L2(3));
        assert!("l3:1".parse::<PlotTarget>().is_err());
        let b: PlotBox = "-1,1,-2,2".parse().unwrap();
        assert_eq!((b.x_min, b.y_max), (-1.0, 2.0));
        assert!("1,0,0,1".parse::<PlotBox>().is_err());
    }

    #[test]
    fn ppm_header_and_size() {
        let dump = GridDump {
            bbox: "0,1,0,1".parse().unwrap(),
            nx: 3,
            ny: 2,
            target: PlotTarget::L1(0),
            values: vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
        };
        let mut buf = Vec::new();
        dump.write_ppm(&mut buf).unwrap();
        assert!(buf.starts_with(b"P6\n3 2\n255\n"));
        assert_eq!(buf.len(), 11 + 18);
        // top-left pixel is the first cell of the upper row
        assert_eq!(buf[11], 153);
    }
}
