import numpy as np
from scipy import integrate
from scipy.linalg import expm


def random_density(d, rng, rank=None):
    rank = rank or d
    x = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = x @ x.conj().T
    return rho / np.trace(rho).real


def random_hermitian(d, rng):
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return x + x.conj().T


def thermal_fock(n_max, nbar):
    """Geometric photon distribution truncated at n_max and renormalised."""
    q = nbar / (1 + nbar)
    p = (1 - q) * q ** np.arange(n_max + 1)
    return p / p.sum()


def time_domain_polaron(h, x_g, x_u, kernels, rho):
    """Brute-force oracle: -(sum_j int G_j(tau) [X_j, X_j(-tau) rho] dtau + h.c.) with expm propagators."""
    out = np.zeros_like(rho)
    for kernel, x in (("g", x_g), ("u", x_u)):
        def integrand(tau, x=x, kernel=kernel):
            u = expm(-1j * h * tau)
            return kernels.green(kernel, tau) * (u @ x @ u.conj().T)

        xt, _ = integrate.quad_vec(integrand, 0.0, kernels.tau_max, epsabs=1e-12, epsrel=1e-10, limit=4000)
        xd = xt.conj().T
        # the h.c. part is written out so the map stays linear on non-Hermitian inputs
        out -= x @ xt @ rho - xt @ rho @ x + rho @ xd @ x - x @ rho @ xd
    return out


# acceptance bookkeeping: criterion number -> (title, [(check, ok, detail), ...])
ACCEPTANCE: dict[int, tuple[str, list]] = {}


def record(criterion: int, title: str, check: str, ok: bool, detail: str = "") -> bool:
    ACCEPTANCE.setdefault(criterion, (title, []))[1].append((check, bool(ok), detail))
    return bool(ok)


def acceptance_lines() -> list[str]:
    lines = []
    for k in sorted(ACCEPTANCE):
        title, checks = ACCEPTANCE[k]
        bad = [f"{c} ({d})" if d else c for c, ok, d in checks if not ok]
        verdict = "PASS" if not bad else "FAIL"
        tail = f"{len(checks)} checks" if not bad else "failed: " + "; ".join(bad)
        lines.append(f"criterion {k} {verdict}  {title}  [{tail}]")
    return lines
