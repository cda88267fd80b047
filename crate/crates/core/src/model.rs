//! Model definition: lattice geometry, per-band parameter matrices, term
//! expansion and the cheap counting diagnostics used for resource estimates.
//!
//! A model is an extended Hubbard Hamiltonian on an open-boundary rectangular
//! lattice with `bands` downfolded orbitals per site,
//!
//! ```text
//! H = sum_{<a,b>, s, m}  t_mm (c+_{a m s} c_{b m s} + h.c.)        intra-band NN hopping
//!   + sum_{a, s, m != n} tbar_mn c+_{a m s} c_{a n s}              on-site hybridization
//!   + sum_{a, s, m}      eps_m n_{a m s}                           on-site potential
//!   + sum_{a, m}         U_mm n_{a m up} n_{a m dn}                same-band Hubbard U
//!   + sum_{a, m != n}    (Ubar_mn / 2) n_{a m} n_{a n}             inter-band U'
//!   + sum_{<a,b>, m, n}  Vbar_mn n_{a m} n_{b n}                   NN density-density V
//! ```
//!
//! where `n_{a m} = n_{a m up} + n_{a m dn}`, `<a,b>` runs over unordered
//! nearest-neighbour bonds, and `m != n` sums run over ordered band pairs.
//! Parameter matrices are stored exactly as published; the orientation
//! ambiguity of asymmetric inputs is resolved at expansion time by
//! symmetrizing (`tbar = (t + t^T)/2`, same for `Ubar`, `Vbar`), because the
//! Hamiltonian applies one matrix in both bond orientations.

use std::path::Path;

use ndarray::Array2;
use serde::Deserialize;

use crate::{Error, Result};

/// Electron spin species. `Up` maps to qubit-index offset 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];

    pub fn index(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }
}

/// Rectangular open-boundary lattice. Sites are indexed row-major:
/// `site = y * nx + x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct LatticeSpec {
    pub nx: usize,
    pub ny: usize,
}

impl LatticeSpec {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::invalid("lattice dimensions must be positive"));
        }
        Ok(LatticeSpec { nx, ny })
    }

    pub fn n_sites(&self) -> usize {
        self.nx * self.ny
    }

    pub fn site_index(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.nx && y < self.ny);
        y * self.nx + x
    }

    pub fn site_coords(&self, site: usize) -> (usize, usize) {
        (site % self.nx, site / self.nx)
    }

    /// Nearest-neighbour bonds as ordered pairs of row-major site indices,
    /// in a fixed deterministic order (per site: +x bond then +y bond).
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.n_bonds());
        for y in 0..self.ny {
            for x in 0..self.nx {
                if x + 1 < self.nx {
                    out.push((self.site_index(x, y), self.site_index(x + 1, y)));
                }
                if y + 1 < self.ny {
                    out.push((self.site_index(x, y), self.site_index(x, y + 1)));
                }
            }
        }
        out
    }

    pub fn n_bonds(&self) -> usize {
        self.nx * (self.ny - 1) + self.ny * (self.nx - 1)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    name: String,
    bands: usize,
    filling: Vec<f64>,
    lattice: LatticeDoc,
    parameters: ParamsDoc,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LatticeDoc {
    nx: usize,
    ny: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsDoc {
    hop_intra: Vec<Vec<f64>>,
    hop_onsite: Vec<Vec<f64>>,
    u_onsite: Vec<Vec<f64>>,
    v_offsite: Vec<Vec<f64>>,
}

/// A downfolded extended-Hubbard model. All parameter matrices are
/// `bands x bands`, in eV, stored exactly as loaded.
///
/// Matrix roles: the diagonal of `hop_intra` is the NN intra-band hopping
/// (off-diagonal entries are recorded but unused, since inter-site inter-band
/// hopping is not part of the model); the diagonal of `hop_onsite` is the
/// per-band on-site potential and its off-diagonal part the on-site
/// hybridization; `u_onsite` holds the same-band U on the diagonal and the
/// inter-band U' off it; `v_offsite` is the NN density-density coupling.
#[derive(Clone, Debug)]
pub struct ExtendedHubbardModel {
    pub name: String,
    pub lattice: LatticeSpec,
    pub bands: usize,
    /// Electrons per site and band; entries in `[0, 2]`.
    pub filling: Vec<f64>,
    pub hop_intra: Array2<f64>,
    pub hop_onsite: Array2<f64>,
    pub u_onsite: Array2<f64>,
    pub v_offsite: Array2<f64>,
}

fn matrix_from_rows(name: &str, rows: &[Vec<f64>], n: usize) -> Result<Array2<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse(format!(
            "{name} must be a {n}x{n} matrix, got {} rows of lengths {:?}",
            rows.len(),
            rows.iter().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((n, n), flat).map_err(|e| Error::Parse(e.to_string()))
}

impl ExtendedHubbardModel {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: ModelDoc = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let nb = doc.bands;
        if nb == 0 {
            return Err(Error::Parse("bands must be positive".into()));
        }
        let model = ExtendedHubbardModel {
            name: doc.name,
            lattice: LatticeSpec::new(doc.lattice.nx, doc.lattice.ny)?,
            bands: nb,
            filling: doc.filling,
            hop_intra: matrix_from_rows("hop_intra", &doc.parameters.hop_intra, nb)?,
            hop_onsite: matrix_from_rows("hop_onsite", &doc.parameters.hop_onsite, nb)?,
            u_onsite: matrix_from_rows("u_onsite", &doc.parameters.u_onsite, nb)?,
            v_offsite: matrix_from_rows("v_offsite", &doc.parameters.v_offsite, nb)?,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let nb = self.bands;
        if self.filling.len() != nb {
            return Err(Error::invalid(format!(
                "filling has {} entries for {} bands",
                self.filling.len(),
                nb
            )));
        }
        for (b, &f) in self.filling.iter().enumerate() {
            if !(0.0..=2.0).contains(&f) {
                return Err(Error::invalid(format!(
                    "filling[{b}] = {f} outside [0, 2] electrons per site"
                )));
            }
        }
        let total = self.filling.iter().sum::<f64>() * self.lattice.n_sites() as f64;
        if (total - total.round()).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "total electron count {total} is not an integer"
            )));
        }
        for (name, m) in [
            ("hop_intra", &self.hop_intra),
            ("hop_onsite", &self.hop_onsite),
            ("u_onsite", &self.u_onsite),
            ("v_offsite", &self.v_offsite),
        ] {
            if m.dim() != (nb, nb) {
                return Err(Error::invalid(format!(
                    "{name} has shape {:?}, expected ({nb}, {nb})",
                    m.dim()
                )));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("{name} contains a non-finite entry")));
            }
        }
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.lattice.n_sites()
    }

    /// Total spin orbitals, i.e. qubits under any one-to-one encoding.
    pub fn n_spin_orbitals(&self) -> usize {
        2 * self.n_sites() * self.bands
    }

    /// Total electron count fixed by the filling vector.
    pub fn n_electrons(&self) -> usize {
        let total = self.filling.iter().sum::<f64>() * self.n_sites() as f64;
        total.round() as usize
    }

    /// Same parameters on a different lattice.
    pub fn with_lattice(&self, nx: usize, ny: usize) -> Result<Self> {
        let mut out = self.clone();
        out.lattice = LatticeSpec::new(nx, ny)?;
        Ok(out)
    }

    /// Copy with all interactions removed (hopping and potentials kept).
    pub fn noninteracting(&self) -> Self {
        let mut out = self.clone();
        out.u_onsite.fill(0.0);
        out.v_offsite.fill(0.0);
        out
    }

    pub fn max_abs_u(&self) -> f64 {
        self.u_onsite.iter().fold(0.0_f64, |a, &v| a.max(v.abs()))
    }

    pub fn onsite_energy(&self, band: usize) -> f64 {
        self.hop_onsite[(band, band)]
    }

    /// Symmetrized on-site hybridization for an ordered band pair.
    pub fn sym_onsite_hop(&self, i: usize, j: usize) -> f64 {
        0.5 * (self.hop_onsite[(i, j)] + self.hop_onsite[(j, i)])
    }

    pub fn sym_u(&self, i: usize, j: usize) -> f64 {
        0.5 * (self.u_onsite[(i, j)] + self.u_onsite[(j, i)])
    }

    pub fn sym_v(&self, i: usize, j: usize) -> f64 {
        0.5 * (self.v_offsite[(i, j)] + self.v_offsite[(j, i)])
    }

    /// Whether the single-band counting convention applies: the on-site
    /// potential category is listed only when it can matter.
    pub fn drop_onsite_potential_default(&self) -> bool {
        self.bands == 1 && (0..self.bands).all(|b| self.onsite_energy(b) == 0.0)
    }

    /// Expands the model into its full term list. Every structural slot is
    /// emitted even when its coefficient is zero, so the list length matches
    /// [`count_terms`] for the same flag.
    pub fn expand_terms(&self, drop_onsite_potential: bool) -> TermList {
        let nb = self.bands;
        let bonds = self.lattice.bonds();
        let n_sites = self.n_sites();
        let mut terms = Vec::new();

        for &(a, b) in &bonds {
            for band in 0..nb {
                for spin in Spin::BOTH {
                    terms.push(Term {
                        kind: TermKind::HopIntra,
                        sites: (a, b),
                        bands: (band, band),
                        spin: Some(spin),
                        coeff: self.hop_intra[(band, band)],
                    });
                }
            }
        }
        for site in 0..n_sites {
            for i in 0..nb {
                for j in 0..nb {
                    if i == j {
                        continue;
                    }
                    for spin in Spin::BOTH {
                        terms.push(Term {
                            kind: TermKind::HopInterOnsite,
                            sites: (site, site),
                            bands: (i, j),
                            spin: Some(spin),
                            coeff: self.sym_onsite_hop(i, j),
                        });
                    }
                }
            }
        }
        if !drop_onsite_potential {
            for site in 0..n_sites {
                for band in 0..nb {
                    for spin in Spin::BOTH {
                        terms.push(Term {
                            kind: TermKind::OnsitePotential,
                            sites: (site, site),
                            bands: (band, band),
                            spin: Some(spin),
                            coeff: self.onsite_energy(band),
                        });
                    }
                }
            }
        }
        for site in 0..n_sites {
            for band in 0..nb {
                terms.push(Term {
                    kind: TermKind::UOnsite,
                    sites: (site, site),
                    bands: (band, band),
                    spin: None,
                    coeff: self.u_onsite[(band, band)],
                });
            }
        }
        for site in 0..n_sites {
            for i in 0..nb {
                for j in 0..nb {
                    if i == j {
                        continue;
                    }
                    terms.push(Term {
                        kind: TermKind::UInterOnsite,
                        sites: (site, site),
                        bands: (i, j),
                        spin: None,
                        coeff: 0.5 * self.sym_u(i, j),
                    });
                }
            }
        }
        for &(a, b) in &bonds {
            for i in 0..nb {
                for j in 0..nb {
                    terms.push(Term {
                        kind: TermKind::VOffsite,
                        sites: (a, b),
                        bands: (i, j),
                        spin: None,
                        coeff: self.sym_v(i, j),
                    });
                }
            }
        }

        let counts = count_terms(self.lattice.nx, self.lattice.ny, nb, drop_onsite_potential);
        debug_assert_eq!(terms.len() as u64, counts.total());
        TermList { terms, counts }
    }

    /// Normalized one-norm of the Hamiltonian coefficients over the published
    /// nearest-neighbour parameters: hopping and potential magnitudes plus
    /// half the interaction magnitudes, divided by the dominant intra-band
    /// hopping. Index sums run over sites and bands only (no spin factor).
    pub fn one_norm(&self) -> Result<f64> {
        let nb = self.bands;
        let n = self.n_sites() as f64;
        let b2 = 2.0 * self.lattice.n_bonds() as f64; // ordered site pairs
        let t_norm = (0..nb).fold(0.0_f64, |a, b| a.max(self.hop_intra[(b, b)].abs()));
        if t_norm == 0.0 {
            return Err(Error::invalid(
                "one-norm undefined: all intra-band hoppings are zero",
            ));
        }
        let mut t_part = 0.0;
        for b in 0..nb {
            t_part += b2 * self.hop_intra[(b, b)].abs();
            t_part += n * self.onsite_energy(b).abs();
        }
        for i in 0..nb {
            for j in 0..nb {
                if i != j {
                    t_part += n * self.sym_onsite_hop(i, j).abs();
                }
            }
        }
        let mut u_part = 0.0;
        for b in 0..nb {
            u_part += n * self.u_onsite[(b, b)].abs();
        }
        for i in 0..nb {
            for j in 0..nb {
                if i != j {
                    u_part += n * self.sym_u(i, j).abs();
                }
                u_part += b2 * self.sym_v(i, j).abs();
            }
        }
        Ok((t_part + 0.5 * u_part) / t_norm)
    }
}

/// Which part of the Hamiltonian a term belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize)]
pub enum TermKind {
    /// `coeff (c+_{a m s} c_{b m s} + h.c.)` on a bond, per band and spin.
    HopIntra,
    /// `coeff c+_{a m s} c_{a n s}` per ordered band pair and spin; the
    /// mirror pair supplies the Hermitian conjugate.
    HopInterOnsite,
    /// `coeff n_{a m s}`.
    OnsitePotential,
    /// `coeff n_{a m up} n_{a m dn}`.
    UOnsite,
    /// `coeff n_{a m} n_{a n}` per ordered band pair, both spins in each
    /// density; the published U' is halved into `coeff`.
    UInterOnsite,
    /// `coeff n_{a m} n_{b n}` per bond and ordered band pair.
    VOffsite,
}

/// One Hamiltonian term. Field meaning depends on `kind`; see [`TermKind`].
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Term {
    pub kind: TermKind,
    pub sites: (usize, usize),
    pub bands: (usize, usize),
    pub spin: Option<Spin>,
    pub coeff: f64,
}

/// Expanded term list plus the per-category tally.
#[derive(Clone, Debug)]
pub struct TermList {
    pub terms: Vec<Term>,
    pub counts: TermCounts,
}

/// Closed-form term tally per category.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct TermCounts {
    pub hop_intra: u64,
    pub hop_inter_onsite: u64,
    pub onsite_potential: u64,
    pub u_onsite: u64,
    pub u_inter_onsite: u64,
    pub v_offsite: u64,
}

impl TermCounts {
    pub fn total(&self) -> u64 {
        self.hop_intra
            + self.hop_inter_onsite
            + self.onsite_potential
            + self.u_onsite
            + self.u_inter_onsite
            + self.v_offsite
    }
}

/// Term tally of the NN-restricted model on an `nx` by `ny` lattice with `nb`
/// bands. `drop_onsite_potential` applies the single-band convention of
/// omitting the potential category.
pub fn count_terms(nx: usize, ny: usize, nb: usize, drop_onsite_potential: bool) -> TermCounts {
    let b = (nx * (ny - 1) + ny * (nx - 1)) as u64;
    let n = (nx * ny) as u64;
    let nb = nb as u64;
    TermCounts {
        hop_intra: 2 * nb * b,
        hop_inter_onsite: 2 * nb * (nb - 1) * n,
        onsite_potential: if drop_onsite_potential { 0 } else { 2 * nb * n },
        u_onsite: nb * n,
        u_inter_onsite: nb * (nb - 1) * n,
        v_offsite: nb * nb * b,
    }
}

/// Term count of the untruncated second-quantized Hamiltonian over
/// `m = nx * ny * n_basis_functions` spatial orbitals: `2 m^2` one-body plus
/// `4 m^4` two-body coefficients.
pub fn count_full_terms(nx: usize, ny: usize, n_basis_functions: usize) -> Result<u64> {
    let m = (nx * ny * n_basis_functions) as u64;
    let m2 = m.checked_mul(m).ok_or_else(|| Error::invalid("orbital count overflow"))?;
    let m4 = m2.checked_mul(m2).ok_or_else(|| Error::invalid("orbital count overflow"))?;
    let one_body = m2.checked_mul(2).ok_or_else(|| Error::invalid("orbital count overflow"))?;
    let two_body = m4.checked_mul(4).ok_or_else(|| Error::invalid("orbital count overflow"))?;
    one_body
        .checked_add(two_body)
        .ok_or_else(|| Error::invalid("orbital count overflow"))
}

/// Fraction of the untruncated coefficient count that the downfolded
/// NN-restricted model retains. The numerator keeps every structural
/// category, including the on-site potential slots.
pub fn compression_ratio(
    nx: usize,
    ny: usize,
    nb: usize,
    n_basis_functions: usize,
) -> Result<f64> {
    let kept = count_terms(nx, ny, nb, false).total();
    let full = count_full_terms(nx, ny, n_basis_functions)?;
    Ok(kept as f64 / full as f64)
}
