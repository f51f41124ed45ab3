//! Lab/center-of-mass kinematics for collinear electron + ion beams and on-shell grouping.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::units::Masses;

/// Lab-frame description of one incident component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabState {
    /// Electron momentum (au).
    pub electron: f64,
    /// Ion momentum (au).
    pub ion: f64,
    pub nu: usize,
    pub internal_energy: f64,
}

impl LabState {
    pub fn total_energy(&self, masses: &Masses) -> f64 {
        0.5 * self.electron * self.electron
            + 0.5 * self.ion * self.ion / masses.ion()
            + self.internal_energy
    }
}

/// (p, P) → (k, K).
pub fn lab_to_cm(p: f64, big_p: f64, masses: &Masses) -> (f64, f64) {
    let m_ion = masses.ion();
    (
        (m_ion * p - big_p) / masses.total(),
        p + big_p,
    )
}

/// (k, K) → (p, P).
pub fn cm_to_lab(k: f64, big_k: f64, masses: &Masses) -> (f64, f64) {
    let m_total = masses.total();
    (k + big_k / m_total, big_k * masses.ion() / m_total - k)
}

/// Magnitude of the outgoing relative momentum for internal energies E_a → E_b.
///
/// `None` when the channel is closed.
pub fn outgoing_momentum(k_a: f64, e_a: f64, e_b: f64, masses: &Masses) -> Option<f64> {
    let k2 = k_a * k_a + 2.0 * masses.relative() * (e_a - e_b);
    (k2 >= 0.0).then(|| k2.sqrt())
}

/// Incident relative momentum that reaches |k_f| with fragment energy `energy`
/// from internal level `e_nu`. `None` when no such incident momentum exists.
pub fn incident_k_for_shell(k_f: f64, energy: f64, e_nu: f64, masses: &Masses) -> Option<f64> {
    let k2 = k_f * k_f + 2.0 * masses.relative() * (energy - e_nu);
    (k2 >= 0.0).then(|| k2.sqrt())
}

/// Lab momenta for level `nu2` sharing total momentum and total energy with `first`.
///
/// The root with the same relative-momentum sign is taken, so the result
/// reduces to `first` as the two internal energies approach each other.
pub fn solve_entangled_partner(
    first: &LabState,
    nu2: usize,
    e_nu2: f64,
    masses: &Masses,
) -> Result<LabState> {
    let (k1, big_k) = lab_to_cm(first.electron, first.ion, masses);
    let k2_sq = k1 * k1 + 2.0 * masses.relative() * (first.internal_energy - e_nu2);
    if k2_sq < 0.0 {
        return Err(Error::Infeasible(format!(
            "level {nu2} lies {:.6} hartree above the available relative kinetic energy",
            -k2_sq / (2.0 * masses.relative())
        )));
    }
    let k2 = k2_sq.sqrt().copysign(if k1 == 0.0 { 1.0 } else { k1 });
    let (p, big_p) = cm_to_lab(k2, big_k, masses);
    Ok(LabState {
        electron: p,
        ion: big_p,
        nu: nu2,
        internal_energy: e_nu2,
    })
}

/// One term of a discrete incident superposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellComponent {
    pub nu: usize,
    pub internal_energy: f64,
    /// Relative momentum (au).
    pub k: f64,
    /// Center-of-mass momentum (au).
    pub big_k: f64,
    pub coeff: Complex64,
}

impl ShellComponent {
    pub fn from_lab(lab: &LabState, coeff: Complex64, masses: &Masses) -> Self {
        let (k, big_k) = lab_to_cm(lab.electron, lab.ion, masses);
        ShellComponent {
            nu: lab.nu,
            internal_energy: lab.internal_energy,
            k,
            big_k,
            coeff,
        }
    }

    /// k²/(2 m_rel) + E_ν
    pub fn total_energy(&self, masses: &Masses) -> f64 {
        self.k * self.k / (2.0 * masses.relative()) + self.internal_energy
    }

    pub fn lab(&self, masses: &Masses) -> LabState {
        let (p, big_p) = cm_to_lab(self.k, self.big_k, masses);
        LabState {
            electron: p,
            ion: big_p,
            nu: self.nu,
            internal_energy: self.internal_energy,
        }
    }
}

/// Components sharing (E_tot, K).
#[derive(Debug, Clone, PartialEq)]
pub struct Shell {
    pub total_energy: f64,
    pub big_k: f64,
    /// Indices into the enumerated component list, ascending.
    pub members: Vec<usize>,
}

pub const DEFAULT_SHELL_TOLERANCE: f64 = 1e-9;

/// Partitions components into on-shell equivalence classes.
///
/// Two components are linked when both E_tot and K agree within `tolerance`;
/// classes are the transitive closure of that relation. Shells are ordered by
/// (E_tot, K).
pub fn enumerate_shells(components: &[ShellComponent], masses: &Masses, tolerance: f64) -> Vec<Shell> {
    let n = components.len();
    let keys: Vec<(f64, f64)> = components
        .iter()
        .map(|c| (c.total_energy(masses), c.big_k))
        .collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (keys[i].0 - keys[j].0).abs() <= tolerance && (keys[i].1 - keys[j].1).abs() <= tolerance {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_slot[r] == usize::MAX {
            root_slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[root_slot[r]].push(i);
    }
    let mut shells: Vec<Shell> = groups
        .into_iter()
        .map(|members| {
            let m = members.len() as f64;
            let total_energy = members.iter().map(|&i| keys[i].0).sum::<f64>() / m;
            let big_k = members.iter().map(|&i| keys[i].1).sum::<f64>() / m;
            Shell {
                total_energy,
                big_k,
                members,
            }
        })
        .collect();
    shells.sort_by(|a, b| {
        a.total_energy
            .total_cmp(&b.total_energy)
            .then(a.big_k.total_cmp(&b.big_k))
    });
    shells
}
