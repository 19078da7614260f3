"""Gaussian Bayesian networks: parameters, sampling, likelihood and I/O."""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NumericalError, ValidationError
from .graph import Dag, parse_arc_list

VARIANCE_FLOOR = 1e-12
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ``n x p`` block of real observations with column labels."""

    variables: tuple
    rows: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        variables = tuple(str(v) for v in self.variables)
        rows = np.array(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != len(variables):
            raise DataError(
                f"{self.provenance or 'dataset'}: expected {len(variables)} columns, "
                f"got shape {rows.shape}"
            )
        if rows.shape[0] < 1:
            raise DataError(f"{self.provenance or 'dataset'}: no rows")
        if not np.all(np.isfinite(rows)):
            raise DataError(f"{self.provenance or 'dataset'}: non-finite values")
        rows.setflags(write=False)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "rows", rows)

    @property
    def n(self):
        return self.rows.shape[0]

    @property
    def p(self):
        return self.rows.shape[1]

    def column(self, i):
        return self.rows[:, i]

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.variables)
        for row in self.rows:
            writer.writerow([_fmt(x) for x in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, provenance=""):
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{provenance or 'csv'}: empty file") from None
        header = [h.strip() for h in header]
        if not header or not all(header):
            raise DataError(f"{provenance or 'csv'}: malformed header")
        rows = []
        for lineno, record in enumerate(reader, start=2):
            if not record or all(not f.strip() for f in record):
                continue
            if len(record) != len(header):
                raise DataError(
                    f"{provenance or 'csv'}:{lineno}: expected {len(header)} fields, got {len(record)}"
                )
            try:
                rows.append([float(f) for f in record])
            except ValueError:
                raise DataError(f"{provenance or 'csv'}:{lineno}: non-numeric field") from None
        if not rows:
            raise DataError(f"{provenance or 'csv'}: no data rows")
        return cls(tuple(header), np.array(rows), provenance)


def _fmt(x):
    return format(float(x), ".17g")


def standardize(data):
    """Centre and scale every column by its own mean and sample std (ddof=1).

    Returns the transformed dataset and a list of ``(mean, std)`` pairs.
    """
    if data.n < 2:
        raise DataError(f"{data.provenance or 'dataset'}: need at least 2 rows to standardize")
    means = data.rows.mean(axis=0)
    stds = data.rows.std(axis=0, ddof=1)
    for label, s in zip(data.variables, stds):
        if not s > 0:
            raise DataError(f"{data.provenance or 'dataset'}: constant column {label!r}")
    z = (data.rows - means) / stds
    return Dataset(data.variables, z, data.provenance), list(zip(means.tolist(), stds.tolist()))


@dataclass(frozen=True, eq=False)
class GaussianBayesianNetwork:
    """Linear-Gaussian network.

    ``coefficients`` maps an arc ``(parent, child)`` to its regression
    weight; node ``i`` is Normal with mean
    ``means[i] + sum(beta[j, i] * (x[j] - means[j]))`` and variance
    ``cond_variances[i]``.
    """

    dag: Dag
    means: np.ndarray
    cond_variances: np.ndarray
    coefficients: dict = field(default_factory=dict)

    def __post_init__(self):
        p = self.dag.p
        means = np.array(self.means, dtype=float)
        variances = np.array(self.cond_variances, dtype=float)
        if means.shape != (p,) or variances.shape != (p,):
            raise ValidationError(f"means and variances must have length {p}")
        if not np.all(variances > 0):
            raise ValidationError("conditional variances must be positive")
        coefs = {(int(a), int(b)): float(v) for (a, b), v in self.coefficients.items()}
        if set(coefs) != set(self.dag.arcs):
            raise ValidationError("coefficient keys must be exactly the arcs of the DAG")
        means.setflags(write=False)
        variances.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "cond_variances", variances)
        object.__setattr__(self, "coefficients", coefs)

    @property
    def variables(self):
        return self.dag.variables

    @property
    def p(self):
        return self.dag.p

    def coefficient_matrix(self):
        """``B[j, i] = beta_ji``; zero where there is no arc."""
        B = np.zeros((self.p, self.p))
        for (j, i), b in self.coefficients.items():
            B[j, i] = b
        return B

    def conditional_params(self, i, parent_values):
        pa = self.dag.parents(i)
        if set(parent_values) != set(pa):
            raise ValidationError(
                f"parent values for {sorted(parent_values)} but parents are {sorted(pa)}"
            )
        mean = self.means[i] + sum(
            self.coefficients[(j, i)] * (parent_values[j] - self.means[j]) for j in pa
        )
        return float(mean), float(self.cond_variances[i])

    def implied_covariance(self):
        """Joint covariance, accumulated node by node in topological order."""
        p = self.p
        sigma = np.zeros((p, p))
        done = []
        for i in self.dag.topological_order():
            pa = sorted(self.dag.parents(i))
            beta = np.array([self.coefficients[(j, i)] for j in pa])
            for k in done:
                c = float(beta @ sigma[pa, k]) if pa else 0.0
                sigma[i, k] = sigma[k, i] = c
            var = self.cond_variances[i]
            if pa:
                var += float(beta @ sigma[np.ix_(pa, pa)] @ beta)
            sigma[i, i] = var
            done.append(i)
        return sigma

    def sample(self, n, seed):
        """Ancestral sampling of ``n`` rows; deterministic given ``seed``."""
        if n < 1:
            raise ValidationError("sample size must be at least 1")
        rng = np.random.default_rng(seed)
        x = np.empty((n, self.p))
        sd = np.sqrt(np.maximum(self.cond_variances, VARIANCE_FLOOR))
        for i in self.dag.topological_order():
            mean = np.full(n, self.means[i])
            for j in sorted(self.dag.parents(i)):
                mean += self.coefficients[(j, i)] * (x[:, j] - self.means[j])
            x[:, i] = mean + sd[i] * rng.standard_normal(n)
        return Dataset(self.variables, x, f"sample(n={n}, seed={seed})")

    def node_log_likelihood(self, i, data):
        """Log-likelihood contribution of node ``i``'s family, summed over rows."""
        x = data.rows
        mean = np.full(data.n, self.means[i])
        for j in self.dag.parents(i):
            mean += self.coefficients[(j, i)] * (x[:, j] - self.means[j])
        v = max(self.cond_variances[i], VARIANCE_FLOOR)
        r = x[:, i] - mean
        return float(-0.5 * (data.n * (_LOG_2PI + math.log(v)) + (r @ r) / v))

    def log_likelihood(self, data):
        if tuple(data.variables) != self.variables:
            raise ValidationError("dataset variables do not match the network")
        return sum(self.node_log_likelihood(i, data) for i in range(self.p))

    # serialization

    def to_text(self):
        v = self.variables
        lines = [self.dag.to_text().rstrip("\n")]
        lines += [f"mean {v[i]} {_fmt(self.means[i])}" for i in range(self.p)]
        lines += [f"var {v[i]} {_fmt(self.cond_variances[i])}" for i in range(self.p)]
        lines += [
            f"coef {v[a]}->{v[b]} {_fmt(self.coefficients[(a, b)])}"
            for a, b in self.dag.sorted_arcs()
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        dag, rest = parse_arc_list(text.splitlines())
        means = [0.0] * dag.p
        variances = [1.0] * dag.p
        coefs = {}
        try:
            for line in rest:
                kind, key, value = line.split()
                if kind == "mean":
                    means[dag.index(key)] = float(value)
                elif kind == "var":
                    variances[dag.index(key)] = float(value)
                elif kind == "coef":
                    a, b = key.split("->")
                    coefs[(dag.index(a), dag.index(b))] = float(value)
                else:
                    raise DataError(f"unknown line {line!r}")
            return cls(dag, means, variances, coefs)
        except (ValueError, ValidationError) as exc:
            if isinstance(exc, DataError):
                raise
            raise DataError(f"malformed network file: {exc}") from exc


def conditional_variance(sigma, i, pa):
    """Variance of ``X_i`` given ``X_pa`` under covariance ``sigma``.

    The Schur complement ``sigma_ii - S_i,pa  S_pa^-1  S_pa,i``.
    """
    sigma = np.asarray(sigma, dtype=float)
    pa = sorted(pa)
    if i in pa:
        raise ValidationError("conditioning set must exclude the target")
    if not pa:
        return float(sigma[i, i])
    s_ip = sigma[i, pa]
    try:
        solved = np.linalg.solve(sigma[np.ix_(pa, pa)], s_ip)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular covariance block for parents {pa}") from exc
    return float(sigma[i, i] - s_ip @ solved)


def check_covariance(sigma, atol=1e-9):
    """Raise unless ``sigma`` is symmetric positive definite."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValidationError("covariance must be square")
    if not np.allclose(sigma, sigma.T, rtol=0, atol=atol):
        raise ValidationError("covariance is not symmetric")
    try:
        np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("covariance is not positive definite") from exc
    return sigma
