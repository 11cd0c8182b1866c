use super::{cg_entries as cg, gmres_entries as gm, ExperimentError, Run};

/// A catalog entry: name, one-line description, the figure it redraws and
/// its parameters with defaults.
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub figures: &'static str,
    pub defaults: &'static [(&'static str, &'static str)],
    pub(crate) run: fn(&mut Run) -> Result<(), ExperimentError>,
}

impl std::fmt::Debug for CatalogEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CatalogEntry").field("name", &self.name).finish_non_exhaustive()
    }
}

const FAMILY30: [(&str, &str); 6] = [
    ("n", "30"),
    ("lambda1", "0.1"),
    ("lambdan", "1000"),
    ("rho.right", "0.6"),
    ("rho.left", "0.6"),
    ("rho.equal", "1"),
];

static CATALOG: [CatalogEntry; 17] = [
    CatalogEntry {
        name: "cg-eigdist",
        description: "exact CG on three eigenvalue distributions (accumulated right, left, equally spaced)",
        figures: "A-norm error curves of exact CG and the cumulative spectral densities of the three spectra",
        defaults: &[
            FAMILY30[0], FAMILY30[1], FAMILY30[2], FAMILY30[3], FAMILY30[4], FAMILY30[5],
            ("cg.error_floor", "1e-16"),
            ("cg.maxit", "200"),
            ("report.level", "1e-8"),
        ],
        run: cg::eigdist,
    },
    CatalogEntry {
        name: "cg-worstcase",
        description: "actual CG error against the discrete min-max bound and the condition-number bound",
        figures: "four panels of relative A-norm error, min-max bound and kappa-bound",
        defaults: &[
            ("n", "48"),
            ("lambda1", "1"),
            ("case1.lambdan", "5"),
            ("case1.rho", "1"),
            ("case2.lambdan", "100"),
            ("case2.rho", "1"),
            ("case3.lambdan", "5"),
            ("case3.rho", "0.1"),
            ("case4.lambdan", "5"),
            ("case4.rho", "1"),
            ("case4.inner_weight", "1e-13"),
            ("cg.error_floor", "1e-16"),
            ("report.level", "1e-10"),
            ("report.k", "4"),
        ],
        run: cg::worstcase,
    },
    CatalogEntry {
        name: "cg-models",
        description: "CG on Wishart matrices and on the 2D Poisson problem with and without reorthogonalization",
        figures: "Wishart spectra with CG curves and the mean-kappa bound; Poisson loss of orthogonality and A-norm error",
        defaults: &[
            ("wishart.samples", "100"),
            ("wishart.m", "500"),
            ("wishart.n", "100"),
            ("wishart.error_floor", "1e-14"),
            ("poisson.grid", "50"),
            ("poisson.maxit", "400"),
            ("poisson.error_floor", "1e-14"),
            ("report.level", "1e-12"),
        ],
        run: cg::models,
    },
    CatalogEntry {
        name: "cg-precond",
        description: "a preconditioner that lowers the condition number but slows exact CG down",
        figures: "A-norm error of exact CG on the original and the preconditioned diagonal system",
        defaults: &[
            ("n", "40"),
            ("lambda1", "1e-3"),
            ("lambdan", "100"),
            ("rho", "0.1"),
            ("mu1", "10"),
            ("mun", "100"),
            ("cg.error_floor", "1e-16"),
            ("cg.maxit", "200"),
            ("report.level", "1e-8"),
            ("report.coarse", "1e-2"),
        ],
        run: cg::precond,
    },
    CatalogEntry {
        name: "cg-clusters",
        description: "exact CG on spectra where every eigenvalue is replaced by a tight cluster",
        figures: "A-norm error curves for clustered spectra and cumulative spectral densities of eigenvalues and Ritz values",
        defaults: &[
            ("n", "10"),
            ("lambda1", "0.1"),
            ("lambdan", "1000"),
            ("rho.right", "0.6"),
            ("rho.left", "0.6"),
            ("rho.equal", "1"),
            ("cluster.size", "10"),
            ("cluster.spacing", "1e-12"),
            ("cg.error_floor", "1e-16"),
            ("cg.maxit", "300"),
            ("report.k", "10"),
            ("csd.k", "10,15"),
        ],
        run: cg::clusters,
    },
    CatalogEntry {
        name: "cg-fp-sensitivity",
        description: "double precision CG on the three distributions against exact CG on 4-fold clustered spectra",
        figures: "finite precision CG curves (left), exact CG on clustered spectra (right) and Ritz value densities",
        defaults: &[
            FAMILY30[0], FAMILY30[1], FAMILY30[2], FAMILY30[3], FAMILY30[4], FAMILY30[5],
            ("cluster.size", "4"),
            ("cluster.spacing", "1e-13"),
            ("cg.error_floor", "1e-15"),
            ("cg.maxit", "150"),
            ("report.level", "1e-8"),
            ("report.match_level", "1e-6"),
            ("csd.k", "20,40"),
        ],
        run: cg::fp_sensitivity,
    },
    CatalogEntry {
        name: "cg-2v3",
        description: "two-term against three-term CG recurrences in exact and double precision",
        figures: "A-norm error of both variants in exact arithmetic and double precision",
        defaults: &[
            ("n", "48"),
            ("lambda1", "0.1"),
            ("lambdan", "1000"),
            ("rho", "0.25"),
            ("cg.error_floor", "1e-16"),
            ("cg.maxit", "250"),
        ],
        run: cg::two_vs_three,
    },
    CatalogEntry {
        name: "cg-prescribed",
        description: "systems with prescribed CG residual and A-norm error trajectories, plus delayed error estimates",
        figures: "prescribed and computed residual and error norms for the two constructed systems",
        defaults: &[
            ("n", "20"),
            ("system1.residual_low", "1"),
            ("system1.residual_high", "2"),
            ("system1.error_factor", "0.4"),
            ("system2.residual_factor", "0.4"),
            ("system2.error_factor", "0.999"),
            ("estimate.delay", "4"),
        ],
        run: cg::prescribed,
    },
    CatalogEntry {
        name: "cg-random-rhs",
        description: "preconditioned CG with random and particular right-hand sides on a variable-coefficient diffusion problem",
        figures: "A-norm error for 100 random and one particular right-hand side, Laplace and incomplete Cholesky preconditioning",
        defaults: &[
            ("grid", "31"),
            ("field.contrast", "100"),
            ("samples", "100"),
            ("ichol.drop_tol", "1e-2"),
            ("cg.error_floor", "1e-12"),
            ("cg.maxit", "300"),
            ("report.level", "1e-6"),
        ],
        run: cg::random_rhs,
    },
    CatalogEntry {
        name: "cg-trajectory",
        description: "finite precision CG mapped onto the exact trajectory by the rank of the computed Krylov basis",
        figures: "exact and shifted finite precision A-norm errors with the two trajectory ratios",
        defaults: &[
            ("n", "35"),
            ("lambda1", "0.1"),
            ("lambdan", "100"),
            ("rho", "0.65"),
            ("tau", "0.1"),
            ("cg.error_floor", "1e-15"),
            ("cg.maxit", "150"),
        ],
        run: cg::trajectory,
    },
    CatalogEntry {
        name: "gmres-anycurve",
        description: "GMRES systems with a prescribed residual curve and prescribed eigenvalues",
        figures: "prescribed staircase residual curves and the computed GMRES residual norms",
        defaults: &[("n", "21"), ("scenario2.step", "4"), ("scenario2.factor", "1e-2"), ("scenario2.floor", "1e-8")],
        run: gm::anycurve,
    },
    CatalogEntry {
        name: "gmres-normal",
        description: "GMRES on normal matrices with circular-law spectra and three shifts",
        figures: "eigenvalues of the three matrix classes and GMRES residual curves over 100 repetitions",
        defaults: &[
            ("n", "100"),
            ("repetitions", "100"),
            ("gmres.tol", "1e-14"),
            ("report.stagnation_level", "0.5"),
            ("report.stagnation_fraction", "0.9"),
            ("report.k", "30"),
            ("report.level", "1e-8"),
        ],
        run: gm::normal,
    },
    CatalogEntry {
        name: "gmres-backward",
        description: "loss of orthogonality times backward error in MGS-GMRES",
        figures: "loss of orthogonality, normwise backward error and their product for fs1836 and sherman2",
        defaults: &[
            ("data.source", "auto"),
            ("gmres.maxit", "0"),
            ("synthetic.n", "183"),
            ("synthetic.kappa", "1e7"),
        ],
        run: gm::backward,
    },
    CatalogEntry {
        name: "gmres-saddle",
        description: "GMRES on a saddle-point system with exact and inexact block-diagonal Schur preconditioning",
        figures: "unpreconditioned, exactly and inexactly preconditioned GMRES: preconditioned and true relative residuals",
        defaults: &[
            ("data.source", "auto"),
            ("synthetic.n", "40"),
            ("synthetic.m", "16"),
            ("inner.tols", "1e-8,1e-4,1e-2"),
            ("inner.maxit", "200"),
            ("gmres.maxit", "40"),
            ("gmres.tol", "1e-14"),
        ],
        run: gm::saddle,
    },
    CatalogEntry {
        name: "gmres-grcar",
        description: "GMRES on the Grcar matrix: harmonic Ritz values stay away from the eigenvalues",
        figures: "eigenvalues and harmonic Ritz values at steps 50, 100, 200 and the GMRES residual curve",
        defaults: &[("n", "500"), ("gmres.maxit", "300"), ("gmres.tol", "1e-14"), ("ritz.k", "50,100,200")],
        run: gm::grcar,
    },
    CatalogEntry {
        name: "gmres-initres",
        description: "GMRES convergence depending on the initial residual: flipped Frank matrix and convection-diffusion",
        figures: "GMRES residuals for the flipped Frank matrix with two right-hand sides and the convection-diffusion problem with 25",
        defaults: &[
            ("frank.n", "16"),
            ("supg.h_inv", "25"),
            ("supg.delta", "0.3"),
            ("supg.nu", "0.01"),
            ("supg.rhs", "25"),
            ("gmres.maxit", "150"),
            ("gmres.tol", "1e-10"),
            ("report.stagnation_level", "0.9"),
        ],
        run: gm::initres,
    },
    CatalogEntry {
        name: "gmres-x0",
        description: "GMRES from a zero, a random and a rescaled random initial guess",
        figures: "relative residual norms and relative error norms for steam1 from three initial guesses",
        defaults: &[
            ("data.source", "auto"),
            ("gmres.maxit", "210"),
            ("gmres.tol", "1e-12"),
            ("synthetic.n", "240"),
            ("synthetic.norm", "2.8e7"),
            ("synthetic.kappa", "2.8e7"),
        ],
        run: gm::x0,
    },
];

/// The seventeen catalog entries, in catalog order.
pub fn list_experiments() -> &'static [CatalogEntry] {
    &CATALOG
}

pub fn catalog_entry(name: &str) -> Option<&'static CatalogEntry> {
    CATALOG.iter().find(|e| e.name == name)
}
