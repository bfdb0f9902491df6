use crate::error::{Error, Result};
use crate::geometry::{norm, sub, Point};
use crate::mesh::{Mesh, TriangleGrid};
use std::io::Write;
use std::sync::{Arc, OnceLock};

/// A P1 finite-element field with `m` components per node.
///
/// With an extension ball set, the field is zero inside that ball wherever
/// the mesh does not cover.
#[derive(Debug)]
pub struct DiscreteField {
    pub mesh: Arc<Mesh>,
    pub m: usize,
    /// `values[node * m + component]`.
    pub values: Vec<f64>,
    pub extension: Option<(Point, f64)>,
    grid: OnceLock<TriangleGrid>,
}

impl Clone for DiscreteField {
    fn clone(&self) -> Self {
        DiscreteField::new(self.mesh.clone(), self.m, self.values.clone(), self.extension)
    }
}

impl DiscreteField {
    pub fn new(mesh: Arc<Mesh>, m: usize, values: Vec<f64>, extension: Option<(Point, f64)>) -> Self {
        assert_eq!(values.len(), mesh.nodes.len() * m, "one value per node and component");
        DiscreteField { mesh, m, values, extension, grid: OnceLock::new() }
    }

    pub fn zero(mesh: Arc<Mesh>, m: usize) -> Self {
        let n = mesh.nodes.len() * m;
        Self::new(mesh, m, vec![0.0; n], None)
    }

    /// Zero extension to `B_radius(center)`.
    pub fn with_extension(mut self, center: Point, radius: f64) -> Self {
        self.extension = Some((center, radius));
        self
    }

    pub fn extension_radius(&self) -> Option<f64> {
        self.extension.map(|(_, r)| r)
    }

    pub fn grid(&self) -> &TriangleGrid {
        self.grid.get_or_init(|| TriangleGrid::new(&self.mesh))
    }

    pub fn node_value(&self, node: usize) -> &[f64] {
        &self.values[node * self.m..(node + 1) * self.m]
    }

    /// Interpolated value at `p`, zero in the extension zone.
    pub fn value_at(&self, p: Point, out: &mut [f64]) -> Result<()> {
        if let Some((t, b)) = self.grid().locate(&self.mesh, p) {
            let tri = self.mesh.triangles[t];
            for c in 0..self.m {
                out[c] = (0..3).map(|k| b[k] * self.values[tri[k] as usize * self.m + c]).sum();
            }
            return Ok(());
        }
        match self.extension {
            Some((c, r)) if norm(sub(p, c)) <= r * (1.0 + 1e-12) => {
                out[..self.m].fill(0.0);
                Ok(())
            }
            _ => Err(Error::Extrapolation { index: usize::MAX, x: p[0], y: p[1] }),
        }
    }

    pub fn scalar_at(&self, p: Point) -> Result<f64> {
        let mut v = [0.0; 3];
        self.value_at(p, &mut v)?;
        Ok(v[0])
    }

    /// Constant gradient of each component on triangle `t`: `[component][direction]`.
    pub fn gradient(&self, t: usize) -> [[f64; 2]; 3] {
        let p = self.mesh.triangle(t);
        let tri = self.mesh.triangles[t];
        let twice = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        let mut g = [[0.0; 2]; 3];
        for i in 0..3 {
            let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
            let gl = [(a[1] - b[1]) / twice, (b[0] - a[0]) / twice];
            for c in 0..self.m {
                let v = self.values[tri[i] as usize * self.m + c];
                g[c][0] += v * gl[0];
                g[c][1] += v * gl[1];
            }
        }
        g
    }

    /// `|∇u|` on each triangle, summed over components.
    pub fn gradient_norms(&self) -> Vec<f64> {
        (0..self.mesh.triangles.len())
            .map(|t| {
                let g = self.gradient(t);
                (0..self.m).map(|c| g[c][0] * g[c][0] + g[c][1] * g[c][1]).sum::<f64>().sqrt()
            })
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Writes `node,x,y,u0[,u1..]` rows.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["node".to_string(), "x".into(), "y".into()];
        header.extend((0..self.m).map(|c| format!("u{c}")));
        out.write_record(&header)?;
        for (i, p) in self.mesh.nodes.iter().enumerate() {
            let mut row = vec![i.to_string(), format!("{:.16e}", p[0]), format!("{:.16e}", p[1])];
            row.extend(self.node_value(i).iter().map(|v| format!("{v:.16e}")));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}
