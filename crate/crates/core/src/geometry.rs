//! Spin layouts and dipole-dipole coupling constants.
//!
//! A [`SpinLayout`] places one NV electron spin and a set of ¹³C nuclei in
//! space (nanometers) together with the static-field direction. From a layout,
//! [`CouplingSet::from_layout`] derives every coupling the Hamiltonian builders
//! need: secular hyperfine vectors (A_zx, A_zy, A_zz) per nucleus, the scalar
//! dipolar coupling J_ij per nuclear pair, and the nuclear Larmor frequency.
//!
//! All couplings are angular frequencies (rad/s). Distances cross the API in
//! nanometers and are converted to meters internally.

use crate::constants::{
    GAMMA_C13, GAMMA_NV, HBAR, MU_0, NM_TO_M, PI, POINT_DIPOLE_WARN_DISTANCE,
};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tilt angle (radians) at which 1 − 3cos²θ vanishes: acos(1/√3) ≈ 54.74°.
/// Also the default tilt of the nuclear layer relative to the field axis.
pub const MAGIC_ANGLE: f64 = 0.955_316_618_124_509_3;

/// Minimum spin separation (nm) below which two positions count as
/// duplicates.
const DUPLICATE_DISTANCE_NM: f64 = 1e-9;

// ---------------------------------------------------------------------------
// 3-vectors
// ---------------------------------------------------------------------------

/// A 3-component vector with the small amount of linear algebra this crate
/// needs (dot, cross, Rodrigues rotation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0, 0.0, 0.0]);
    pub const X: Vec3 = Vec3([1.0, 0.0, 0.0]);
    pub const Y: Vec3 = Vec3([0.0, 1.0, 0.0]);
    pub const Z: Vec3 = Vec3([0.0, 0.0, 1.0]);

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }

    pub fn z(&self) -> f64 {
        self.0[2]
    }

    pub fn dot(&self, other: Vec3) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn cross(&self, other: Vec3) -> Vec3 {
        Vec3([
            self.0[1] * other.0[2] - self.0[2] * other.0[1],
            self.0[2] * other.0[0] - self.0[0] * other.0[2],
            self.0[0] * other.0[1] - self.0[1] * other.0[0],
        ])
    }

    pub fn norm(&self) -> f64 {
        self.dot(*self).sqrt()
    }

    /// Unit vector along `self`; errors on (near-)zero input.
    pub fn normalized(&self) -> Result<Vec3> {
        let n = self.norm();
        if n < 1e-300 {
            return Err(Error::invalid("cannot normalize a zero-length vector"));
        }
        Ok(*self * (1.0 / n))
    }

    /// Rotate `self` by `angle` about the (unit) `axis` via the Rodrigues
    /// formula.
    pub fn rotated_about(&self, axis: Vec3, angle: f64) -> Vec3 {
        let (s, c) = angle.sin_cos();
        *self * c + axis.cross(*self) * s + axis * (axis.dot(*self) * (1.0 - c))
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3([
            self.0[0] + rhs.0[0],
            self.0[1] + rhs.0[1],
            self.0[2] + rhs.0[2],
        ])
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3([
            self.0[0] - rhs.0[0],
            self.0[1] - rhs.0[1],
            self.0[2] - rhs.0[2],
        ])
    }
}

impl std::ops::Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, rhs: f64) -> Vec3 {
        Vec3([self.0[0] * rhs, self.0[1] * rhs, self.0[2] * rhs])
    }
}

/// Complete `z_axis` (unit) to a right-handed orthonormal frame (x̂, ŷ, ẑ).
///
/// The in-plane axes are fixed deterministically by Gram-Schmidt against the
/// lab x axis (or y when the field is along x), so transverse hyperfine
/// components are reported in a reproducible gauge.
pub fn frame_from_z(z_axis: Vec3) -> Result<(Vec3, Vec3, Vec3)> {
    let z = z_axis.normalized()?;
    let seed = if z.x().abs() < 0.9 { Vec3::X } else { Vec3::Y };
    let x = (seed - z * seed.dot(z)).normalized()?;
    let y = z.cross(x);
    Ok((x, y, z))
}

// ---------------------------------------------------------------------------
// Layouts
// ---------------------------------------------------------------------------

/// Positions and field configuration for one NV electron spin plus a set of
/// ¹³C nuclei. Distances are nanometers; gyromagnetic ratios rad·s⁻¹·T⁻¹.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpinLayout {
    /// NV electron position (nm).
    pub nv_position: Vec3,
    /// Nuclear positions (nm), in deterministic construction order
    /// (row-major by grid index for grid builders).
    pub nuclear_positions: Vec<Vec3>,
    /// Gyromagnetic ratio of the nuclei (rad·s⁻¹·T⁻¹).
    pub nuclear_gyromagnetic_ratio: f64,
    /// Gyromagnetic ratio of the NV electron spin (rad·s⁻¹·T⁻¹).
    pub electron_gyromagnetic_ratio: f64,
    /// Static field magnitude (tesla).
    pub field_magnitude: f64,
    /// Unit vector along the static field; defines the z axis of every
    /// coupling frame.
    pub field_axis: Vec3,
    /// Tilt of the nuclear layer relative to the field axis (radians).
    pub layer_tilt: f64,
}

impl SpinLayout {
    /// Number of nuclei (the NV is not counted).
    pub fn n_nuclei(&self) -> usize {
        self.nuclear_positions.len()
    }

    /// Total spin count including the NV.
    pub fn n_spins(&self) -> usize {
        self.nuclear_positions.len() + 1
    }

    /// Replace the field magnitude (tesla), keeping the axis.
    pub fn with_field_tesla(mut self, b: f64) -> Self {
        self.field_magnitude = b;
        self
    }

    /// Replace the field magnitude, given in gauss.
    pub fn with_field_gauss(self, b_gauss: f64) -> Self {
        self.with_field_tesla(b_gauss * crate::constants::GAUSS_TO_TESLA)
    }

    /// Append one nucleus at an explicit position (nm).
    pub fn push_nucleus(&mut self, position_nm: Vec3) {
        self.nuclear_positions.push(position_nm);
    }

    /// Check structural invariants: unit field axis, no duplicated spins.
    pub fn validate(&self) -> Result<()> {
        if (self.field_axis.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "field_axis must be unit length (|axis| = {})",
                self.field_axis.norm()
            )));
        }
        if self.field_magnitude < 0.0 {
            return Err(Error::invalid("field_magnitude must be >= 0"));
        }
        for (i, p) in self.nuclear_positions.iter().enumerate() {
            if (*p - self.nv_position).norm() < DUPLICATE_DISTANCE_NM {
                return Err(Error::invalid(format!(
                    "nucleus {i} coincides with the NV position"
                )));
            }
            for (j, q) in self.nuclear_positions.iter().enumerate().skip(i + 1) {
                if (*p - *q).norm() < DUPLICATE_DISTANCE_NM {
                    return Err(Error::invalid(format!(
                        "nuclei {i} and {j} occupy the same position"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Export as a plain-text table: one header block, then one row per spin
    /// (`species x_nm y_nm z_nm`), NV first, nuclei in stored order.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str("# spinlayer layout v1\n");
        out.push_str(&format!(
            "# field_tesla {:.17e}\n# field_axis {:.17e} {:.17e} {:.17e}\n",
            self.field_magnitude,
            self.field_axis.x(),
            self.field_axis.y(),
            self.field_axis.z()
        ));
        out.push_str(&format!(
            "# layer_tilt_rad {:.17e}\n# gamma_n {:.17e}\n# gamma_e {:.17e}\n",
            self.layer_tilt, self.nuclear_gyromagnetic_ratio, self.electron_gyromagnetic_ratio
        ));
        out.push_str(&format!(
            "NV {:.17e} {:.17e} {:.17e}\n",
            self.nv_position.x(),
            self.nv_position.y(),
            self.nv_position.z()
        ));
        for p in &self.nuclear_positions {
            out.push_str(&format!("C13 {:.17e} {:.17e} {:.17e}\n", p.x(), p.y(), p.z()));
        }
        out
    }

    /// Parse the format written by [`SpinLayout::to_table`].
    pub fn from_table(text: &str) -> Result<Self> {
        let mut layout = SpinLayout {
            nv_position: Vec3::ZERO,
            nuclear_positions: Vec::new(),
            nuclear_gyromagnetic_ratio: GAMMA_C13,
            electron_gyromagnetic_ratio: GAMMA_NV,
            field_magnitude: 0.0,
            field_axis: Vec3::Z,
            layer_tilt: MAGIC_ANGLE,
        };
        let mut saw_nv = false;
        let parse3 = |parts: &[&str], what: &str| -> Result<Vec3> {
            if parts.len() != 3 {
                return Err(Error::Format(format!("{what}: expected 3 numbers")));
            }
            let mut v = [0.0; 3];
            for (slot, tok) in v.iter_mut().zip(parts) {
                *slot = tok
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("{what}: bad number {tok:?}: {e}")))?;
            }
            Ok(Vec3(v))
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "#" => match fields.get(1).copied() {
                    Some("field_tesla") if fields.len() == 3 => {
                        layout.field_magnitude = fields[2]
                            .parse()
                            .map_err(|e| Error::Format(format!("line {lineno}: {e}")))?;
                    }
                    Some("field_axis") => layout.field_axis = parse3(&fields[2..], "field_axis")?,
                    Some("layer_tilt_rad") if fields.len() == 3 => {
                        layout.layer_tilt = fields[2]
                            .parse()
                            .map_err(|e| Error::Format(format!("line {lineno}: {e}")))?;
                    }
                    Some("gamma_n") if fields.len() == 3 => {
                        layout.nuclear_gyromagnetic_ratio = fields[2]
                            .parse()
                            .map_err(|e| Error::Format(format!("line {lineno}: {e}")))?;
                    }
                    Some("gamma_e") if fields.len() == 3 => {
                        layout.electron_gyromagnetic_ratio = fields[2]
                            .parse()
                            .map_err(|e| Error::Format(format!("line {lineno}: {e}")))?;
                    }
                    _ => {} // tolerated comment
                    },
                "NV" => {
                    layout.nv_position = parse3(&fields[1..], "NV row")?;
                    saw_nv = true;
                }
                "C13" => layout.nuclear_positions.push(parse3(&fields[1..], "C13 row")?),
                other => {
                    return Err(Error::Format(format!(
                        "line {lineno}: unknown species {other:?}"
                    )))
                }
            }
        }
        if !saw_nv {
            return Err(Error::Format("layout table has no NV row".into()));
        }
        layout.validate()?;
        Ok(layout)
    }
}

/// Optional knobs for [`build_layer_grid_with`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridOptions {
    /// Lateral (x, y) offset of the grid centroid relative to the NV axis,
    /// in nm, applied before tilting. Default (0, 0): centroid on the axis.
    pub lateral_offset_nm: (f64, f64),
    /// Static field magnitude in tesla. Default 0.06 T (600 G).
    pub field_tesla: f64,
    /// Field axis (normalized on use). Default +z.
    pub field_axis: Vec3,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            lateral_offset_nm: (0.0, 0.0),
            field_tesla: 0.06,
            field_axis: Vec3::Z,
        }
    }
}

/// Build an `nx × ny` planar grid of nuclei (optionally stacked `n_layers`
/// deep) at `distance` nm from the NV along the field axis, then tilt the
/// whole assembly by `tilt` radians about the in-plane x axis through the NV.
///
/// The grid centroid sits on the NV z axis before tilting (override via
/// [`GridOptions::lateral_offset_nm`]); extra layers stack away from the NV
/// along the layer normal at the grid spacing. Rotating about the NV keeps
/// every NV-nucleus distance equal to its pre-tilt value.
pub fn build_layer_grid(
    nx: usize,
    ny: usize,
    spacing_nm: f64,
    distance_nm: f64,
    tilt_rad: f64,
    n_layers: usize,
) -> Result<SpinLayout> {
    build_layer_grid_with(
        nx,
        ny,
        spacing_nm,
        distance_nm,
        tilt_rad,
        n_layers,
        &GridOptions::default(),
    )
}

/// [`build_layer_grid`] with explicit [`GridOptions`].
pub fn build_layer_grid_with(
    nx: usize,
    ny: usize,
    spacing_nm: f64,
    distance_nm: f64,
    tilt_rad: f64,
    n_layers: usize,
    options: &GridOptions,
) -> Result<SpinLayout> {
    if nx * ny * n_layers == 0 {
        return Err(Error::invalid("grid must contain at least one site"));
    }
    if !(1..=3).contains(&n_layers) {
        return Err(Error::invalid(format!(
            "n_layers must be 1, 2, or 3 (got {n_layers})"
        )));
    }
    if spacing_nm <= 0.0 {
        return Err(Error::invalid(format!(
            "grid spacing must be positive (got {spacing_nm} nm)"
        )));
    }
    if distance_nm <= 0.0 {
        return Err(Error::invalid(format!(
            "NV-layer distance must be positive (got {distance_nm} nm)"
        )));
    }
    let field_axis = options.field_axis.normalized()?;
    let cx = (nx as f64 - 1.0) / 2.0;
    let cy = (ny as f64 - 1.0) / 2.0;
    let mut positions = Vec::with_capacity(nx * ny * n_layers);
    // Row-major enumeration: layer, then y row, then x column.
    for layer in 0..n_layers {
        for iy in 0..ny {
            for ix in 0..nx {
                let p = Vec3::new(
                    (ix as f64 - cx) * spacing_nm + options.lateral_offset_nm.0,
                    (iy as f64 - cy) * spacing_nm + options.lateral_offset_nm.1,
                    distance_nm + layer as f64 * spacing_nm,
                );
                positions.push(p.rotated_about(Vec3::X, tilt_rad));
            }
        }
    }
    let layout = SpinLayout {
        nv_position: Vec3::ZERO,
        nuclear_positions: positions,
        nuclear_gyromagnetic_ratio: GAMMA_C13,
        electron_gyromagnetic_ratio: GAMMA_NV,
        field_magnitude: options.field_tesla,
        field_axis,
        layer_tilt: tilt_rad,
    };
    layout.validate()?;
    Ok(layout)
}

/// Build a linear chain of `n` nuclei along the x axis at `depth_nm` below
/// the layer plane's intersection with the field axis: positions
/// ((i − (n−1)/2)·spacing, 0, depth). The chain is centered, so an even `n`
/// puts no nucleus directly on the NV axis.
pub fn build_chain(n: usize, spacing_nm: f64, depth_nm: f64) -> Result<SpinLayout> {
    if n == 0 {
        return Err(Error::invalid("chain must contain at least one nucleus"));
    }
    if spacing_nm <= 0.0 || depth_nm <= 0.0 {
        return Err(Error::invalid("chain spacing and depth must be positive"));
    }
    let c = (n as f64 - 1.0) / 2.0;
    let positions = (0..n)
        .map(|i| Vec3::new((i as f64 - c) * spacing_nm, 0.0, depth_nm))
        .collect();
    let layout = SpinLayout {
        nv_position: Vec3::ZERO,
        nuclear_positions: positions,
        nuclear_gyromagnetic_ratio: GAMMA_C13,
        electron_gyromagnetic_ratio: GAMMA_NV,
        field_magnitude: 0.06,
        field_axis: Vec3::Z,
        layer_tilt: 0.0,
    };
    layout.validate()?;
    Ok(layout)
}

// ---------------------------------------------------------------------------
// Couplings
// ---------------------------------------------------------------------------

/// Scalar secular dipolar coupling between two like nuclei separated by
/// `r_vec_nm` (nm) in a strong field along `field_axis`:
///
/// J = (μ₀/4π) · γ_N² · ħ · (1 − 3cos²θ) / |r|³   [rad/s]
///
/// where θ is the angle between the separation vector and the field axis.
/// The full secular pair Hamiltonian is J·(I_z I_z − ½(I_x I_x + I_y I_y)).
pub fn nuclear_dipolar(r_vec_nm: Vec3, gamma_n: f64, field_axis: Vec3) -> Result<f64> {
    let z = field_axis.normalized()?;
    let r_m = r_vec_nm.norm() * NM_TO_M;
    if r_m <= 0.0 {
        return Err(Error::invalid(
            "dipolar coupling undefined for zero separation",
        ));
    }
    let cos_theta = r_vec_nm.dot(z) / r_vec_nm.norm();
    let prefactor = MU_0 / (4.0 * PI) * gamma_n * gamma_n * HBAR / (r_m * r_m * r_m);
    Ok(prefactor * (1.0 - 3.0 * cos_theta * cos_theta))
}

/// Secular hyperfine vector (A_zx, A_zy, A_zz) in rad/s for a nucleus at
/// `r_vec_nm` (nm) from the electron, in the frame where z = field axis and
/// the in-plane gauge comes from [`frame_from_z`]:
///
/// A_zα = (μ₀/4π) · γ_e γ_N ħ / |r|³ · (3 n̂_z n̂_α − δ_zα)
///
/// so a nucleus on the field axis has A_zx = A_zy = 0 and
/// A_zz = 2·(μ₀/4π)·γ_e·γ_N·ħ/|r|³. The point-dipole form is used at every
/// distance; [`CouplingSet::from_layout`] records a warning for nuclei closer
/// than [`POINT_DIPOLE_WARN_DISTANCE`], where contact corrections matter.
pub fn hyperfine_vector(
    r_vec_nm: Vec3,
    gamma_e: f64,
    gamma_n: f64,
    field_axis: Vec3,
) -> Result<[f64; 3]> {
    let (x, y, z) = frame_from_z(field_axis)?;
    let r_norm_nm = r_vec_nm.norm();
    if r_norm_nm * NM_TO_M <= 0.0 {
        return Err(Error::invalid(
            "hyperfine coupling undefined for zero separation",
        ));
    }
    let n_hat = r_vec_nm * (1.0 / r_norm_nm);
    let r_m = r_norm_nm * NM_TO_M;
    let b = MU_0 / (4.0 * PI) * gamma_e * gamma_n * HBAR / (r_m * r_m * r_m);
    let nz = n_hat.dot(z);
    Ok([
        b * 3.0 * nz * n_hat.dot(x),
        b * 3.0 * nz * n_hat.dot(y),
        b * (3.0 * nz * nz - 1.0),
    ])
}

/// Every coupling constant derived from a [`SpinLayout`]: per-nucleus secular
/// hyperfine vectors, per-pair nuclear dipolar scalars (upper triangle,
/// i < j), and the nuclear Larmor frequency. All in rad/s.
#[derive(Debug, Clone)]
pub struct CouplingSet {
    n_nuclei: usize,
    /// (A_zx, A_zy, A_zz) per nucleus.
    hyperfine: Vec<[f64; 3]>,
    /// J_ij packed as upper triangle: pair (i, j), i < j, at
    /// `i·n − i(i+1)/2 + (j − i − 1)`.
    nuclear_dipolar: Vec<f64>,
    /// γ_N · B (rad/s).
    larmor: f64,
    /// Human-readable notes recorded during construction (e.g. nuclei inside
    /// the point-dipole validity radius).
    warnings: Vec<String>,
}

impl CouplingSet {
    /// Compute all couplings from a layout, with no dipolar cutoff.
    pub fn from_layout(layout: &SpinLayout) -> Result<Self> {
        Self::from_layout_with_cutoff(layout, None)
    }

    /// Compute all couplings; pairs separated by more than `cutoff_nm`
    /// (when given) get J = 0, which downstream builders treat as "no term".
    pub fn from_layout_with_cutoff(layout: &SpinLayout, cutoff_nm: Option<f64>) -> Result<Self> {
        layout.validate()?;
        let n = layout.n_nuclei();
        let mut warnings = Vec::new();
        let mut hyperfine = Vec::with_capacity(n);
        for (i, p) in layout.nuclear_positions.iter().enumerate() {
            let r = *p - layout.nv_position;
            if r.norm() * NM_TO_M < POINT_DIPOLE_WARN_DISTANCE {
                warnings.push(format!(
                    "nucleus {i} is {:.3} nm from the NV, inside the {:.3} nm \
                     point-dipole validity radius; the hyperfine coupling is \
                     computed anyway and may exceed the point-dipole value",
                    r.norm(),
                    POINT_DIPOLE_WARN_DISTANCE / NM_TO_M
                ));
            }
            hyperfine.push(hyperfine_vector(
                r,
                layout.electron_gyromagnetic_ratio,
                layout.nuclear_gyromagnetic_ratio,
                layout.field_axis,
            )?);
        }
        let mut dipolar = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                let r = layout.nuclear_positions[j] - layout.nuclear_positions[i];
                let j_ij = if cutoff_nm.is_some_and(|c| r.norm() > c) {
                    0.0
                } else {
                    nuclear_dipolar(r, layout.nuclear_gyromagnetic_ratio, layout.field_axis)?
                };
                dipolar.push(j_ij);
            }
        }
        Ok(CouplingSet {
            n_nuclei: n,
            hyperfine,
            nuclear_dipolar: dipolar,
            larmor: layout.nuclear_gyromagnetic_ratio * layout.field_magnitude,
            warnings,
        })
    }

    /// A coupling set with no geometry behind it: `n` nuclei coupled to their
    /// chain neighbors at a uniform `j` (rad/s), zero hyperfine, and an
    /// explicit Larmor frequency. Useful for idealized uniform-J models.
    pub fn uniform_chain(n: usize, j: f64, larmor: f64) -> Self {
        let mut set = CouplingSet {
            n_nuclei: n,
            hyperfine: vec![[0.0; 3]; n],
            nuclear_dipolar: vec![0.0; n * n.saturating_sub(1) / 2],
            larmor,
            warnings: Vec::new(),
        };
        for i in 0..n.saturating_sub(1) {
            set.set_j(i, i + 1, j);
        }
        set
    }

    pub fn n_nuclei(&self) -> usize {
        self.n_nuclei
    }

    pub fn larmor(&self) -> f64 {
        self.larmor
    }

    pub fn set_larmor(&mut self, larmor: f64) {
        self.larmor = larmor;
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn hyperfine(&self, i: usize) -> [f64; 3] {
        self.hyperfine[i]
    }

    /// Override one nucleus's hyperfine vector (rad/s).
    pub fn set_hyperfine(&mut self, i: usize, a: [f64; 3]) {
        self.hyperfine[i] = a;
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n_nuclei);
        i * self.n_nuclei - i * (i + 1) / 2 + (j - i - 1)
    }

    /// J between nuclei `i` and `j` (rad/s); symmetric in its arguments.
    pub fn j(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.nuclear_dipolar[self.pair_index(a, b)]
    }

    /// Override one pair coupling (rad/s).
    pub fn set_j(&mut self, i: usize, j: usize, value: f64) {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let idx = self.pair_index(a, b);
        self.nuclear_dipolar[idx] = value;
    }

    /// Iterate over all pairs (i, j, J_ij) with i < j.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_nuclei).flat_map(move |i| {
            ((i + 1)..self.n_nuclei).map(move |j| (i, j, self.j(i, j)))
        })
    }

    /// Mean |J| over all pairs (rad/s); 0 for fewer than two nuclei.
    pub fn mean_abs_dipolar(&self) -> f64 {
        if self.nuclear_dipolar.is_empty() {
            return 0.0;
        }
        self.nuclear_dipolar.iter().map(|j| j.abs()).sum::<f64>()
            / self.nuclear_dipolar.len() as f64
    }
}
