"""Optimization-based certificate controllers.

Three layers:

* solve_ccf_qp: the slack-penalized tracking QP, solved exactly in closed
  form via its two-case KKT system, with the KKT residual reported.
* solve_ccf_socp: the min-norm conic program with posterior-uncertainty and
  robust correction terms, solved by a small log-barrier damped-Newton
  method (no external solver); a slack-augmented variant mirrors the QP
  penalty when a problem is infeasible.
* ce_controller / robust_socp_controller: closures assembling per-query
  problems from a fitted model, the nominal Cdot split, and the
  certificate spec.
"""

import numpy as np

from . import regression
from .certify import clf_value


class InfeasibleError(RuntimeError):
    """Conic constraint has no solution; carries the minimal-violation point."""

    def __init__(self, message, point, violation):
        super().__init__(message)
        self.point = point
        self.violation = violation


class QPProblem:
    """min ||u||^2 + c1 ||u - u_d||^2 + rho delta^2  s.t.  a'u + b <= delta."""

    def __init__(self, u_d, c1, a, b, rho):
        self.u_d = np.asarray(u_d, dtype=float)
        self.c1 = float(c1)
        self.a = np.asarray(a, dtype=float)
        self.b = float(b)
        self.rho = float(rho)
        if self.c1 < 0:
            raise ValueError("tracking weight c1 must be >= 0")
        if not self.rho > 0:
            raise ValueError("slack penalty rho must be positive")
        if self.u_d.shape != self.a.shape:
            raise ValueError("u_d and a must have the same dimension")


def solve_ccf_qp(p):
    """Exact minimizer of the slack QP plus its KKT residual.

    Case (i): the unconstrained tracking optimum already satisfies the
    constraint with delta = 0.  Case (ii): the constraint is active and the
    rank-one stationarity system gives delta in closed form.

    Returns (u, delta, kkt_residual).
    """
    c1, rho, a, b = p.c1, p.rho, p.a, p.b
    u0 = (c1 / (1.0 + c1)) * p.u_d
    if a @ u0 + b <= 0.0:
        u, delta, eta = u0, 0.0, 0.0
    else:
        delta = (c1 * (a @ p.u_d) + (1.0 + c1) * b) / (1.0 + c1 + rho * (a @ a))
        u = (c1 * p.u_d - rho * delta * a) / (1.0 + c1)
        eta = 2.0 * rho * delta
    slack = a @ u + b - delta
    kkt = max(
        float(np.max(np.abs(2.0 * u + 2.0 * c1 * (u - p.u_d) + eta * a))),
        abs(2.0 * rho * delta - eta),
        max(0.0, slack),
        abs(eta * slack),
        max(0.0, -eta),
    )
    return u, float(delta), kkt


class RobustBoundParams:
    """Constants feeding the feature-approximation robustness bounds."""

    def __init__(self, epsilon, beta, kappa, sigma_n, sigma_max, N, lam):
        vals = dict(epsilon=epsilon, beta=beta, kappa=kappa,
                    sigma_n=sigma_n, sigma_max=sigma_max)
        for name, v in vals.items():
            if v < 0:
                raise ValueError("%s must be >= 0, got %r" % (name, v))
        if int(N) < 1:
            raise ValueError("N must be >= 1")
        if not lam > 0:
            raise ValueError("lam must be positive")
        self.epsilon = float(epsilon)
        self.beta = float(beta)
        self.kappa = float(kappa)
        self.sigma_n = float(sigma_n)
        self.sigma_max = float(sigma_max)
        self.N = int(N)
        self.lam = float(lam)


def robust_terms(p):
    """Correction coefficients (nu, iota, Delta) for the robust conic constraint.

    The constraint adds epsilon*(nu ||u|| + iota ||u||^2 + Delta) on top of
    the posterior terms; all three are monotone nondecreasing in epsilon.
    """
    sN = np.sqrt(p.N)
    lam = p.lam
    nu = (p.sigma_max / (sN * lam)) * (p.sigma_n + 2.0 * p.beta * p.kappa / sN
                                       + 2.0 * p.beta * p.epsilon)
    iota = p.beta * p.epsilon * p.sigma_max ** 2 / (p.N * lam)
    delta_mu = (1.0 / (lam * sN)) * (1.0 + p.kappa * p.sigma_max / (p.N * sN * lam)
                                     + p.kappa / (sN * lam))
    delta_sigma = 1.0 + p.epsilon + p.kappa / (sN * lam)
    Delta = p.beta * delta_sigma + (p.beta * p.kappa + sN * p.sigma_n) * delta_mu
    return float(nu), float(iota), float(Delta)


class SOCPProblem:
    """min ||u||^2 subject to
    xi @ [u;1] + beta ||omega @ [u;1]|| + eps(nu ||u|| + iota ||u||^2 + Delta)
    + alpha_term <= 0."""

    def __init__(self, xi, omega, alpha_term, beta,
                 epsilon=0.0, nu=0.0, iota=0.0, delta=0.0):
        self.xi = np.asarray(xi, dtype=float)
        self.omega = np.asarray(omega, dtype=float)
        self.alpha_term = float(alpha_term)
        self.beta = float(beta)
        self.epsilon = float(epsilon)
        self.nu = float(nu)
        self.iota = float(iota)
        self.delta = float(delta)
        k = self.xi.shape[0]
        if self.omega.shape != (k, k):
            raise ValueError("omega must be (m+1) x (m+1) to match xi")
        if not np.all(np.isfinite(self.omega)) or not np.all(np.isfinite(self.xi)):
            raise ValueError("problem data must be finite")
        if min(self.beta, self.epsilon, self.nu, self.iota, self.delta) < 0:
            raise ValueError("beta and robust extras must be >= 0")

    @property
    def m(self):
        return self.xi.shape[0] - 1


def constraint_value(p, u):
    """The conic constraint's left-hand side at u (feasible iff <= 0)."""
    u = np.asarray(u, dtype=float)
    y = np.concatenate([u, [1.0]])
    un = np.linalg.norm(u)
    return float(p.xi @ y + p.beta * np.linalg.norm(p.omega @ y)
                 + p.epsilon * (p.nu * un + p.iota * un * un + p.delta)
                 + p.alpha_term)


_TAU2 = 1e-24        # norm smoothing (tau = 1e-12)
_BARRIER_MU = 20.0
_BARRIER_GAP = 1e-11


def solve_ccf_socp(p, slack_rho=None):
    """Solve the min-norm conic program.

    Purely affine instances are projected onto the halfspace in closed
    form.  Otherwise a feasibility phase minimizes the (smoothed)
    constraint; if a strictly feasible point exists, a log-barrier Newton
    method drives the duality gap below 1e-11.  Infeasible problems raise
    InfeasibleError carrying the minimal-violation point, unless slack_rho
    is given, in which case the QP-style penalized program
    min ||u||^2 + slack_rho*delta^2 s.t. constraint <= delta is solved.

    Returns (u, residual) where residual = max(0, constraint_value(u)).
    """
    m = p.m
    a_lin = p.xi[:m]
    b_const = p.xi[m] + p.alpha_term + p.epsilon * p.delta
    W = p.beta * p.omega[:, :m]
    w0 = p.beta * p.omega[:, m]
    cn = p.epsilon * p.nu
    cq = p.epsilon * p.iota

    if (not W.any()) and (not w0.any()) and cn == 0.0 and cq == 0.0:
        u = _solve_affine(p, a_lin, b_const)
        return u, max(0.0, constraint_value(p, u))

    def cfun(u):
        r = W @ u + w0
        return (a_lin @ u + b_const + np.sqrt(r @ r + _TAU2)
                + cn * np.sqrt(u @ u + _TAU2) + cq * (u @ u))

    def cgrad(u):
        r = W @ u + w0
        s1 = np.sqrt(r @ r + _TAU2)
        s2 = np.sqrt(u @ u + _TAU2)
        return a_lin + W.T @ r / s1 + cn * u / s2 + 2.0 * cq * u

    def chess(u):
        r = W @ u + w0
        s1 = np.sqrt(r @ r + _TAU2)
        s2 = np.sqrt(u @ u + _TAU2)
        Wr = W.T @ r
        H = W.T @ W / s1 - np.outer(Wr, Wr) / s1 ** 3
        H += cn * (np.eye(m) / s2 - np.outer(u, u) / s2 ** 3)
        H += 2.0 * cq * np.eye(m)
        return H

    u_feas, c_min = _minimize_constraint(m, cfun, cgrad, chess)
    if c_min > -1e-12:
        if slack_rho is not None:
            u = _barrier_slack(m, cfun, cgrad, chess, slack_rho)
            return u, max(0.0, constraint_value(p, u))
        raise InfeasibleError(
            "conic constraint infeasible (min violation %g)" % max(0.0, c_min),
            point=u_feas, violation=max(0.0, c_min))
    u = _barrier_strict(m, cfun, cgrad, chess, u_feas)
    return u, max(0.0, constraint_value(p, u))


def _solve_affine(p, a_lin, b_const):
    nrm2 = a_lin @ a_lin
    if nrm2 == 0.0:
        if b_const <= 0.0:
            return np.zeros(p.m)
        raise InfeasibleError(
            "constraint reduces to %g <= 0 with no input dependence" % b_const,
            point=np.zeros(p.m), violation=b_const)
    return -max(0.0, b_const) * a_lin / nrm2


def _minimize_constraint(m, cfun, cgrad, chess, max_iter=200):
    """Damped Newton descent on the smoothed constraint; returns (argmin, min)."""
    u = np.zeros(m)
    c = cfun(u)
    scale = max(1.0, abs(c))
    target = -1e-6 * scale
    for _ in range(max_iter):
        if c <= target:
            break
        g = cgrad(u)
        H = chess(u)
        try:
            step = np.linalg.solve(H + 1e-12 * np.eye(m), -g)
        except np.linalg.LinAlgError:
            step = -g
        if not np.all(np.isfinite(step)) or g @ step >= 0.0:
            step = -g
        t, decreased = 1.0, False
        for _ in range(60):
            cand = u + t * step
            c_new = cfun(cand)
            if c_new < c + 1e-4 * t * (g @ step):
                u, c, decreased = cand, c_new, True
                break
            t *= 0.5
        if not decreased:
            break
    return u, c


def _newton_barrier(z0, F, gradF, hessF, feasible):
    """Damped Newton on a barrier objective, keeping iterates feasible."""
    z = z0
    f = F(z)
    for _ in range(60):
        g = gradF(z)
        H = hessF(z)
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            step = -g
        if not np.all(np.isfinite(step)) or g @ step >= 0.0:
            step = -g
        lam2 = -(g @ step)
        if lam2 / 2.0 <= 1e-12:
            break
        t, moved = 1.0, False
        for _ in range(60):
            cand = z + t * step
            if feasible(cand):
                f_new = F(cand)
                if f_new < f + 1e-4 * t * (g @ step):
                    z, f, moved = cand, f_new, True
                    break
            t *= 0.5
        if not moved:
            break
    return z


def _barrier_strict(m, cfun, cgrad, chess, u0):
    u = u0
    t = 1.0
    while True:
        def F(v):
            c = cfun(v)
            return t * (v @ v) - np.log(-c) if c < 0.0 else np.inf

        def gradF(v):
            s = -cfun(v)
            return t * 2.0 * v + cgrad(v) / s

        def hessF(v):
            s = -cfun(v)
            g = cgrad(v)
            return t * 2.0 * np.eye(m) + chess(v) / s + np.outer(g, g) / s ** 2

        u = _newton_barrier(u, F, gradF, hessF, lambda v: cfun(v) < 0.0)
        if 1.0 / t < _BARRIER_GAP:
            return u
        t *= _BARRIER_MU


def _barrier_slack(m, cfun, cgrad, chess, rho):
    z = np.zeros(m + 1)
    z[m] = cfun(z[:m]) + 1.0
    t = 1.0
    while True:
        def F(zz):
            s = zz[m] - cfun(zz[:m])
            if s <= 0.0:
                return np.inf
            return t * (zz[:m] @ zz[:m] + rho * zz[m] ** 2) - np.log(s)

        def gradF(zz):
            u, d = zz[:m], zz[m]
            s = d - cfun(u)
            g = np.empty(m + 1)
            g[:m] = t * 2.0 * u + cgrad(u) / s
            g[m] = t * 2.0 * rho * d - 1.0 / s
            return g

        def hessF(zz):
            u, d = zz[:m], zz[m]
            s = d - cfun(u)
            gc = cgrad(u)
            H = np.empty((m + 1, m + 1))
            H[:m, :m] = t * 2.0 * np.eye(m) + chess(u) / s + np.outer(gc, gc) / s ** 2
            H[:m, m] = -gc / s ** 2
            H[m, :m] = -gc / s ** 2
            H[m, m] = t * 2.0 * rho + 1.0 / s ** 2
            return H

        z = _newton_barrier(z, F, gradF, hessF,
                            lambda zz: zz[m] - cfun(zz[:m]) > 0.0)
        if 1.0 / t < _BARRIER_GAP:
            return z[:m]
        t *= _BARRIER_MU


def ce_controller(model, nominal_split, spec, c1=25.0, rho=1e6, u_d=None):
    """Certainty-equivalent QP controller.

    Args:
        model: fitted affine regression model (or None for the model-free
            oracle/nominal controllers); only its mean enters the QP.
        nominal_split: callable x -> (bias, row) for the nominal Cdot.
        spec: CLFSpec.
        c1: tracking weight toward u_d.
        rho: slack penalty, a constant or a callable of the trajectory time
            (the episodic schedule passes 1e6*(t+1)).
        u_d: callable (t, x) -> desired input; defaults to zero.

    Returns:
        controller (t, x) -> u, deterministic in its arguments.
    """
    rho_fn = rho if callable(rho) else (lambda t: rho)

    def controller(t, x):
        b_nom, a_nom = nominal_split(x)
        if model is None:
            a_model = np.zeros_like(a_nom)
            b_model = 0.0
        else:
            xi = regression.affine_mean(model, x)
            a_model, b_model = xi[:-1], xi[-1]
        a = a_nom + a_model
        b = b_nom + b_model + spec.alpha(clf_value(spec, x))
        desired = np.zeros_like(a) if u_d is None else u_d(t, x)
        u, _, _ = solve_ccf_qp(QPProblem(desired, c1, a, b, rho_fn(t)))
        return u

    return controller


def socp_problem(post, b_nom, a_nom, alpha_term, beta, epsilon=0.0, robust=None):
    """Assemble the conic program from an AffinePosterior and the nominal split.

    With robust=None (or epsilon=0) this is the plain posterior program;
    passing robust=(nu, iota, Delta) from robust_terms adds the
    feature-error corrections.
    """
    xi = post.xi.copy()
    xi[:-1] += np.asarray(a_nom, dtype=float)
    xi[-1] += float(b_nom)
    nu, iota, delta = robust if robust is not None else (0.0, 0.0, 0.0)
    return SOCPProblem(xi, post.omega, alpha_term, beta,
                       epsilon=epsilon, nu=nu, iota=iota, delta=delta)


def robust_socp_controller(model, nominal_split, spec, beta,
                           epsilon=0.0, robust=None, slack_rho=None):
    """Min-norm conic controller from a fitted GP model's affine posterior."""

    def controller(t, x):
        b_nom, a_nom = nominal_split(x)
        post = regression.affine_decompose(model, x)
        prob = socp_problem(post, b_nom, a_nom, spec.alpha(clf_value(spec, x)),
                            beta, epsilon=epsilon, robust=robust)
        u, _ = solve_ccf_socp(prob, slack_rho=slack_rho)
        return u

    return controller
