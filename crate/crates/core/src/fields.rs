//! Composite approximate solution on the (ρ, θ, s) grid:
//!
//! 𝕧 = h⁻¹v₃¹ c′ + X^h(s) v²‡,   𝕡 = h⁻³p⁰(s),
//!
//! with norms weighted by the volume element βh² dσ ds, and CSV / legacy VTK export.

use std::collections::hash_map::DefaultHasher;
use std::fs::File;
use std::hash::{Hash, Hasher};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{PipeError, Result};
use crate::geometry::PipeGeometry;
use crate::prandtl::PrandtlProfile;
use crate::reynolds::{longitudinal_velocity, PressureProfile};
use crate::section::{SectionMesh, VectorField2};
use crate::sgrid;
use crate::transverse::TransverseSolution;

pub const CSV_HEADER: [&str; 14] = [
    "s", "theta", "rho", "eta", "x", "y", "z", "v1", "v2", "v3", "vx", "vy", "vz", "p",
];

/// One grid point of the assembled field.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldPoint {
    pub s: f64,
    pub theta: f64,
    pub rho: f64,
    pub eta: f64,
    pub position: [f64; 3],
    /// components along (e₁(θ), e₂(θ), c′)
    pub v_frame: [f64; 3],
    pub v_cartesian: [f64; 3],
    pub p: f64,
}

impl FieldPoint {
    pub fn to_row(&self) -> [f64; 14] {
        let (x, v, c) = (self.position, self.v_frame, self.v_cartesian);
        [
            self.s, self.theta, self.rho, self.eta, x[0], x[1], x[2], v[0], v[1], v[2], c[0], c[1],
            c[2], self.p,
        ]
    }

    pub fn from_row(r: &[f64; 14]) -> Self {
        FieldPoint {
            s: r[0],
            theta: r[1],
            rho: r[2],
            eta: r[3],
            position: [r[4], r[5], r[6]],
            v_frame: [r[7], r[8], r[9]],
            v_cartesian: [r[10], r[11], r[12]],
            p: r[13],
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FieldMetadata {
    pub h: f64,
    pub flux: f64,
    pub p_per: f64,
    pub cutoff: bool,
    pub transverse: bool,
    pub geometry_hash: String,
}

/// Points are ordered with ρ fastest, then θ, then s.
#[derive(Clone, Debug)]
pub struct FlowField {
    /// (ρ points, θ points, s points)
    pub dims: [usize; 3],
    pub points: Vec<FieldPoint>,
    /// h²∫𝕧·c′ dσ per station, which should equal hF⁰
    pub station_flux: Vec<f64>,
    pub metadata: FieldMetadata,
}

impl FlowField {
    pub fn index(&self, k: usize, j: usize, i: usize) -> usize {
        k + self.dims[0] * (j + self.dims[1] * i)
    }

    pub fn point(&self, k: usize, j: usize, i: usize) -> &FieldPoint {
        &self.points[self.index(k, j, i)]
    }
}

/// Smoothstep cutoff: 0 on [0, h] ∪ [1−h, 1], 1 on [2h, 1−2h].
pub fn cutoff(s: f64, h: f64) -> f64 {
    let ramp = |t: f64| {
        let x = ((t - h) / h).clamp(0.0, 1.0);
        x * x * (3.0 - 2.0 * x)
    };
    ramp(s).min(ramp(1.0 - s))
}

fn geometry_hash(geom: &PipeGeometry) -> String {
    let mut hasher = DefaultHasher::new();
    format!("{:?}", geom.radius_law().spec()).hash(&mut hasher);
    for st in geom.stations() {
        for v in st.point.c.to_array().iter().chain(&st.kappa) {
            v.to_bits().hash(&mut hasher);
        }
    }
    format!("{:016x}", hasher.finish())
}

/// Assembles the composite field from per-station solutions.
pub fn assemble(
    geom: &PipeGeometry,
    meshes: &[SectionMesh],
    prandtl: &PrandtlProfile,
    pressure: &PressureProfile,
    transverse: Option<&[TransverseSolution]>,
    use_cutoff: bool,
) -> Result<FlowField> {
    let n_st = meshes.len();
    if prandtl.solutions.len() != n_st || pressure.len() != n_st || geom.stations().len() != n_st {
        return Err(PipeError::Mismatch(
            "station counts differ between inputs".into(),
        ));
    }
    if let Some(t) = transverse {
        if t.len() != n_st {
            return Err(PipeError::Mismatch(
                "transverse solutions do not cover every station".into(),
            ));
        }
    }
    let h = geom.h();
    let (nr, nt) = (meshes[0].n_rho(), meshes[0].n_theta());
    let dims = [nr + 1, nt, n_st];
    let mut points = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
    let mut station_flux = Vec::with_capacity(n_st);
    for (i, mesh) in meshes.iter().enumerate() {
        if mesh.n_rho() != nr || mesh.n_theta() != nt {
            return Err(PipeError::Mismatch(format!(
                "mesh at station {i} has a different resolution"
            )));
        }
        let st = geom.station(i);
        let v3: Vec<f64> = longitudinal_velocity(&prandtl.solutions[i].psi, pressure.dp[i])
            .iter()
            .map(|v| v / h)
            .collect();
        station_flux.push(h * h * mesh.integrate(&v3));
        let weight = if use_cutoff { cutoff(st.s, h) } else { 1.0 };
        let zero = VectorField2::zeros(mesh.n_nodes());
        let vt = match transverse {
            Some(t) => &t[i].v,
            None => &zero,
        };
        let p = pressure.p[i] / (h * h * h);
        let t = st.point.d1;
        for j in 0..nt {
            let theta = mesh.theta(j);
            for k in 0..=nr {
                let n = mesh.node(k, j);
                let nd = mesh.coords(n);
                let (vx, vy) = (weight * vt.x[n], weight * vt.y[n]);
                let vt_sec = VectorField2 {
                    x: vec![vx],
                    y: vec![vy],
                };
                let (v1, v2) = vt_sec.frame_components(0, theta);
                let cart = st.a * vx + st.b * vy + t * v3[n];
                points.push(FieldPoint {
                    s: st.s,
                    theta,
                    rho: nd.rho,
                    eta: nd.eta,
                    position: st.position(h, nd.eta, theta).to_array(),
                    v_frame: [v1, v2, v3[n]],
                    v_cartesian: cart.to_array(),
                    p,
                });
            }
        }
    }
    Ok(FlowField {
        dims,
        points,
        station_flux,
        metadata: FieldMetadata {
            h,
            flux: pressure.flux,
            p_per: pressure.p_per,
            cutoff: use_cutoff,
            transverse: transverse.is_some(),
            geometry_hash: geometry_hash(geom),
        },
    })
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct NormReport {
    /// ‖𝕧‖
    pub velocity: f64,
    /// ‖∇𝕧‖
    pub gradient: f64,
    /// ‖𝕡 − 𝕡̄‖
    pub pressure: f64,
    /// h‖∇𝕧‖ + ‖𝕧‖ + h²‖𝕡 − 𝕡̄‖
    pub combined: f64,
}

/// Norms over the pipe with volume element βh² dσ ds; with a reference,
/// the norms of the difference.
pub fn norms(
    field: &FlowField,
    meshes: &[SectionMesh],
    reference: Option<&FlowField>,
) -> Result<NormReport> {
    let [nr1, nt, n_st] = field.dims;
    if meshes.len() != n_st
        || meshes
            .iter()
            .any(|m| m.n_rho() + 1 != nr1 || m.n_theta() != nt)
    {
        return Err(PipeError::Mismatch(
            "meshes do not match the field grid".into(),
        ));
    }
    if let Some(r) = reference {
        if r.dims != field.dims {
            return Err(PipeError::Mismatch(format!(
                "field grids differ: {:?} vs {:?}",
                field.dims, r.dims
            )));
        }
    }
    let h = field.metadata.h;
    let value = |i: usize, k: usize, j: usize| -> ([f64; 3], f64) {
        let a = field.point(k, j, i);
        match reference {
            Some(r) => {
                let b = r.point(k, j, i);
                (
                    [
                        a.v_cartesian[0] - b.v_cartesian[0],
                        a.v_cartesian[1] - b.v_cartesian[1],
                        a.v_cartesian[2] - b.v_cartesian[2],
                    ],
                    a.p - b.p,
                )
            }
            None => (a.v_cartesian, a.p),
        }
    };
    // nodal component arrays per station in mesh ordering
    let mut comps: Vec<[Vec<f64>; 3]> = Vec::with_capacity(n_st);
    let mut pres: Vec<Vec<f64>> = Vec::with_capacity(n_st);
    for (i, mesh) in meshes.iter().enumerate() {
        let mut c = [
            vec![0.0; mesh.n_nodes()],
            vec![0.0; mesh.n_nodes()],
            vec![0.0; mesh.n_nodes()],
        ];
        let mut p = vec![0.0; mesh.n_nodes()];
        for (n, nd) in mesh.nodes().iter().enumerate() {
            let (v, q) = value(i, nd.k, nd.j);
            for d in 0..3 {
                c[d][n] = v[d];
            }
            p[n] = q;
        }
        comps.push(c);
        pres.push(p);
    }
    let s: Vec<f64> = field.points.iter().step_by(nr1 * nt).map(|p| p.s).collect();
    let ds_comps: Option<Vec<Vec<Vec<f64>>>> = if n_st >= 3 {
        let ds = sgrid::spacing(&s)?;
        Some(
            (0..3)
                .map(|d| {
                    let f: Vec<Vec<f64>> = comps.iter().map(|c| c[d].clone()).collect();
                    sgrid::first_derivative_fields(&f, ds)
                })
                .collect::<Result<_>>()?,
        )
    } else {
        None
    };
    let mut vel = vec![0.0; n_st];
    let mut grad = vec![0.0; n_st];
    let mut pmean = vec![0.0; n_st];
    let mut vol = vec![0.0; n_st];
    for (i, mesh) in meshes.iter().enumerate() {
        let beta = mesh.beta();
        let w = |f: &[f64]| h * h * mesh.integrate_beta(f);
        let sq: Vec<f64> = (0..mesh.n_nodes())
            .map(|n| (0..3).map(|d| comps[i][d][n].powi(2)).sum())
            .collect();
        vel[i] = w(&sq);
        let mut g2 = vec![0.0; mesh.n_nodes()];
        for d in 0..3 {
            let g = mesh.grad(&comps[i][d]);
            for n in 0..mesh.n_nodes() {
                g2[n] += (g.x[n].powi(2) + g.y[n].powi(2)) / (h * h);
                if let Some(dsc) = &ds_comps {
                    g2[n] += (dsc[d][i][n] / beta[n]).powi(2);
                }
            }
        }
        grad[i] = w(&g2);
        pmean[i] = w(&pres[i]);
        vol[i] = w(&vec![1.0; mesh.n_nodes()]);
    }
    let trap = |f: &[f64]| -> f64 {
        if f.len() < 2 {
            return 0.0;
        }
        let ds = (s[s.len() - 1] - s[0]) / (s.len() - 1) as f64;
        ds * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[f.len() - 1]))
    };
    let p_bar = trap(&pmean) / trap(&vol);
    let pdev: Vec<f64> = meshes
        .iter()
        .enumerate()
        .map(|(i, mesh)| {
            let d: Vec<f64> = pres[i].iter().map(|p| (p - p_bar).powi(2)).collect();
            h * h * mesh.integrate_beta(&d)
        })
        .collect();
    let velocity = trap(&vel).sqrt();
    let gradient = trap(&grad).sqrt();
    let pressure = trap(&pdev).sqrt();
    Ok(NormReport {
        velocity,
        gradient,
        pressure,
        combined: h * gradient + velocity + h * h * pressure,
    })
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(field: &FlowField, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for p in &field.points {
        w.write_record(p.to_row().iter().map(|&v| fmt(v)))
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads back a field CSV written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<FieldPoint>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    let header: Vec<String> = r
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(String::from)
        .collect();
    if header != CSV_HEADER {
        return Err(PipeError::Mismatch(format!(
            "unexpected CSV header {header:?}"
        )));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_error)?;
        let mut row = [0.0; 14];
        if rec.len() != 14 {
            return Err(PipeError::Mismatch(format!(
                "CSV row has {} fields",
                rec.len()
            )));
        }
        for (slot, field) in row.iter_mut().zip(rec.iter()) {
            *slot = field
                .trim()
                .parse()
                .map_err(|e| PipeError::Mismatch(format!("bad number {field:?}: {e}")))?;
        }
        out.push(FieldPoint::from_row(&row));
    }
    Ok(out)
}

fn csv_error(e: csv::Error) -> PipeError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => PipeError::Io(io),
        other => PipeError::Mismatch(format!("CSV error: {other:?}")),
    }
}

/// Legacy ASCII VTK structured grid with point data VELOCITY and PRESSURE.
pub fn write_vtk(field: &FlowField, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let n = field.points.len();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "curved pipe flow, h = {}", fmt(field.metadata.h))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_GRID")?;
    writeln!(
        w,
        "DIMENSIONS {} {} {}",
        field.dims[0], field.dims[1], field.dims[2]
    )?;
    writeln!(w, "POINTS {n} double")?;
    for p in &field.points {
        let x = p.position;
        writeln!(w, "{} {} {}", fmt(x[0]), fmt(x[1]), fmt(x[2]))?;
    }
    writeln!(w, "POINT_DATA {n}")?;
    writeln!(w, "VECTORS VELOCITY double")?;
    for p in &field.points {
        let v = p.v_cartesian;
        writeln!(w, "{} {} {}", fmt(v[0]), fmt(v[1]), fmt(v[2]))?;
    }
    writeln!(w, "SCALARS PRESSURE double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for p in &field.points {
        writeln!(w, "{}", fmt(p.p))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::geometry::{CurveSpec, RadiusSpec};
    use crate::prandtl::rigidity_profile;
    use crate::reynolds::solve_reynolds;
    use crate::section::build_meshes;

    fn straight(h: f64, flux: f64, n: usize) -> (FlowField, Vec<SectionMesh>) {
        let geom = PipeGeometry::build(
            &CurveSpec::Straight,
            RadiusSpec::Constant { r0: 1.0 },
            h,
            4,
            n,
        )
        .unwrap();
        let meshes = build_meshes(&geom, n).unwrap();
        let prof = rigidity_profile(&meshes).unwrap();
        let p = solve_reynolds(&prof.rigidity, flux, 0.0).unwrap();
        let f = assemble(&geom, &meshes, &prof, &p, None, true).unwrap();
        (f, meshes)
    }

    #[test]
    fn straight_disk_field_and_norm() {
        let h = 0.1;
        let (f, meshes) = straight(h, 1.0, 64);
        let c = 2.0 / (PI * h);
        let err = f
            .points
            .iter()
            .map(|p| (p.v_frame[2] - c * (1.0 - p.eta * p.eta)).abs() / c)
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "relative profile error {err}");
        for p in &f.points {
            assert!((p.p - 8.0 / PI * (1.0 - p.s) / h.powi(3)).abs() < 1e-3 * 8.0 / PI / h.powi(3));
            assert_eq!((p.v_frame[0], p.v_frame[1]), (0.0, 0.0));
        }
        for q in &f.station_flux {
            assert!((q - h).abs() < 1e-3 * h);
        }
        let n = norms(&f, &meshes, None).unwrap();
        assert!(
            (n.velocity - 2.0 / (3.0 * PI).sqrt()).abs() < 1e-3,
            "{}",
            n.velocity
        );
        let zero = norms(&f, &meshes, Some(&f)).unwrap();
        assert_eq!(
            (zero.velocity, zero.gradient, zero.pressure),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn no_slip_and_zero_flux() {
        let (f, _) = straight(0.1, 0.0, 8);
        assert!(f.points.iter().all(|p| p.v_cartesian == [0.0; 3]));
        let (f, _) = straight(0.1, 1.0, 8);
        for i in 0..f.dims[2] {
            for j in 0..f.dims[1] {
                assert_eq!(f.point(f.dims[0] - 1, j, i).v_cartesian, [0.0; 3]);
            }
        }
    }

    #[test]
    fn cutoff_profile() {
        let h = 0.1;
        assert_eq!(cutoff(0.05, h), 0.0);
        assert_eq!(cutoff(0.97, h), 0.0);
        assert_eq!(cutoff(0.5, h), 1.0);
        assert!((cutoff(0.15, h) - 0.5).abs() < 1e-12);
        let mut prev = 0.0;
        for i in 0..=100 {
            let c = cutoff(0.1 + 0.001 * i as f64, h);
            assert!(c >= prev);
            prev = c;
        }
    }

    fn grid_field(dims: [usize; 3]) -> FlowField {
        let mut points = Vec::new();
        for i in 0..dims[2] {
            for j in 0..dims[1] {
                for k in 0..dims[0] {
                    let t = (k + 7 * j + 31 * i) as f64;
                    points.push(FieldPoint {
                        s: i as f64 / 3.0,
                        theta: j as f64 * 0.1,
                        rho: k as f64 / 3.0,
                        eta: (t * 0.37).sin(),
                        position: [t.sqrt(), 1.0 / (1.0 + t), PI * t],
                        v_frame: [t.cos(), t.exp().ln_1p(), -t / 3.0],
                        v_cartesian: [1e-300 * t, 1e300 / (1.0 + t), 0.1 + 0.2 * t],
                        p: -t.powf(1.7),
                    });
                }
            }
        }
        FlowField {
            dims,
            points,
            station_flux: vec![],
            metadata: FieldMetadata {
                h: 0.1,
                flux: 1.0,
                p_per: 0.0,
                cutoff: true,
                transverse: false,
                geometry_hash: String::new(),
            },
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let f = grid_field([4, 4, 4]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fields.csv");
        write_csv(&f, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 65);
        assert!(text.starts_with("s,theta,rho,eta,x,y,z,v1,v2,v3,vx,vy,vz,p"));
        let back = read_csv(&path).unwrap();
        assert_eq!(back, f.points);
    }

    #[test]
    fn vtk_header() {
        let f = grid_field([3, 4, 2]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fields.vtk");
        write_vtk(&f, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(text.contains("DIMENSIONS 3 4 2"));
        assert!(text.contains("VECTORS VELOCITY double"));
        assert!(text.contains("SCALARS PRESSURE double 1"));
    }

    #[test]
    fn unwritable_path_is_an_error() {
        let f = grid_field([2, 2, 2]);
        assert!(write_csv(&f, Path::new("/nonexistent-dir/x/fields.csv")).is_err());
    }
}
