//! Atomic-unit constants and conversions.

/// Proton mass in electron masses.
pub const PROTON_MASS: f64 = 1836.152672;

/// One atomic unit of time in femtoseconds.
pub const AU_TIME_FS: f64 = 0.024189;

/// Boltzmann constant in hartree per kelvin.
pub const BOLTZMANN_HARTREE_PER_K: f64 = 3.166_811_563e-6;

pub fn au_to_fs(t: f64) -> f64 {
    t * AU_TIME_FS
}

pub fn fs_to_au(t: f64) -> f64 {
    t / AU_TIME_FS
}

/// Masses of the electron-ion system, in electron masses.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Masses {
    pub proton: f64,
}

impl Default for Masses {
    fn default() -> Self {
        Masses { proton: PROTON_MASS }
    }
}

impl Masses {
    pub fn new(proton: f64) -> Self {
        Masses { proton }
    }

    /// Nuclear reduced mass of the homonuclear diatomic.
    pub fn nuclear_reduced(&self) -> f64 {
        self.proton / 2.0
    }

    /// Ion mass (two protons; the bound electron is folded into the total).
    pub fn ion(&self) -> f64 {
        2.0 * self.proton
    }

    /// Total electron + ion mass.
    pub fn total(&self) -> f64 {
        self.ion() + 1.0
    }

    /// Electron-ion reduced mass.
    pub fn relative(&self) -> f64 {
        self.ion() / self.total()
    }
}
