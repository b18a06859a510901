"""Spectral geometry on the two compact model surfaces.

Both backends carry the same normalization: total volume fixed at 2*pi, the
background metric has constant curvature (flat torus, round sphere with
Ric = 2*omega0), and the Laplacian is sign-fixed to have *nonnegative*
spectrum, so that ``omega = (1 - lap(u)) * omega0`` for a potential u and
``integrate(f * lap(f)) >= 0``.

Torus: unit square [0,1)^2 with omega0 = 2*pi dx dy, so
``lap = -(1/2pi)(d^2/dx^2 + d^2/dy^2)`` and the plane wave
cos(2*pi*(k*x + l*y)) is an eigenfunction with eigenvalue 2*pi*(k^2+l^2).

Sphere: radius r with r^2 = 1/2 (area 2*pi), eigenvalue of a degree-l
spherical harmonic is l*(l+1)/r^2 = 2*l*(l+1).

All operations act on plain float64 arrays shaped like the surface grid;
``check_field`` enforces the shape/finiteness contract at module boundaries.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

VOL = 2.0 * np.pi

__all__ = [
    "VOL",
    "Torus",
    "Sphere",
    "build_surface",
    "check_field",
    "gradient_pairing",
]


def check_field(surface, values):
    """Validate a sampled field against its owning surface; returns the array."""
    values = np.asarray(values, dtype=np.float64)
    if values.shape != surface.shape:
        raise ConfigError(
            f"field shape {values.shape} does not match surface grid {surface.shape}"
        )
    if not np.all(np.isfinite(values)):
        raise ConfigError("field contains non-finite entries")
    return values


class Torus:
    """Flat unit-square torus with spectral (FFT) differential operators."""

    backend = "torus"
    euler_char = 0
    curvature = 0.0  # Ric omega0 = 0

    def __init__(self, n):
        if n < 16 or n % 2 != 0:
            raise ConfigError(f"torus resolution must be even and >= 16, got {n}")
        self.n = int(n)
        self.shape = (self.n, self.n)
        self.h = 1.0 / self.n
        self.vol = VOL
        x = np.arange(self.n) / self.n
        self.X, self.Y = np.meshgrid(x, x, indexing="ij")
        kx = np.fft.fftfreq(self.n, d=1.0 / self.n)
        ky = np.fft.rfftfreq(self.n, d=1.0 / self.n)
        self._eig_r = 2.0 * np.pi * (kx[:, None] ** 2 + ky[None, :] ** 2)
        # full-spectrum d/dz multiplier, Nyquist zeroed for odd derivatives
        kxf = kx.copy()
        kyf = np.fft.fftfreq(self.n, d=1.0 / self.n)
        kxf[self.n // 2] = 0.0
        kyf[self.n // 2] = 0.0
        self._dz_mult = np.pi * (kyf[None, :] + 1j * kxf[:, None])

    # -- quadrature and spectral calculus -------------------------------
    def integrate(self, values):
        return float(VOL * np.mean(values))

    def laplacian(self, values):
        vk = np.fft.rfft2(values)
        return np.fft.irfft2(vk * self._eig_r, s=self.shape)

    def solve_shifted(self, c, rhs):
        """Solve (lap + c) f = rhs spectrally.

        c = 0 requires a mean-free rhs and returns the zero-mean solution.
        """
        if c < 0:
            raise ConfigError("shifted solve requires c >= 0")
        vk = np.fft.rfft2(rhs)
        if c < 1e-12:  # mean-mode division is meaningless below roundoff
            mean = VOL * vk[0, 0].real / self.n**2
            if abs(mean) > 1e-9 * max(1.0, float(np.max(np.abs(rhs)))):
                raise ConfigError(
                    f"c=0 solve needs mean-free rhs; integral = {mean:.3e}"
                )
            out = np.zeros_like(vk)
            np.divide(vk, self._eig_r + c, out=out, where=self._eig_r > 0)
        else:
            out = vk / (self._eig_r + c)
        return np.fft.irfft2(out, s=self.shape)

    def dz(self, values):
        """d/dz = (d/dx - i d/dy)/2 of a real field (complex output)."""
        vk = np.fft.fft2(values)
        return np.fft.ifft2(vk * self._dz_mult)

    def dz2(self, values):
        vk = np.fft.fft2(values)
        return np.fft.ifft2(vk * self._dz_mult**2)

    def solve_block_model(self, m, r1, r2):
        """Exact inverse of the constant-coefficient model system
        [[lap + m1, m2*lap], [m3, lap + m4]] per Fourier mode."""
        m1, m2, m3, m4 = m
        a1 = np.fft.rfft2(r1)
        a2 = np.fft.rfft2(r2)
        lam = self._eig_r
        det = (lam + m1) * (lam + m4) - m2 * lam * m3
        x1 = ((lam + m4) * a1 - m2 * lam * a2) / det
        x2 = (-m3 * a1 + (lam + m1) * a2) / det
        return (
            np.fft.irfft2(x1, s=self.shape),
            np.fft.irfft2(x2, s=self.shape),
        )

    # -- geometry --------------------------------------------------------
    def wrap_displacement(self, p):
        """Min-image displacement (dx, dy) from p to every grid node."""
        dx = self.X - p[0]
        dy = self.Y - p[1]
        dx -= np.round(dx)
        dy -= np.round(dy)
        return dx, dy

    def distance_field(self, p):
        dx, dy = self.wrap_displacement(p)
        return np.hypot(dx, dy)

    def distance_points(self, a, b):
        dx = a[0] - b[0] - round(a[0] - b[0])
        dy = a[1] - b[1] - round(a[1] - b[1])
        return float(np.hypot(dx, dy))

    def farthest_grid_index(self, p):
        d = self.distance_field(p)
        return np.unravel_index(np.argmax(d), self.shape)

    def point_off_grid(self, p, tol=1e-6):
        # offsets measured in cell units; a node hit needs both near zero
        dx = abs(p[0] * self.n - round(p[0] * self.n))
        dy = abs(p[1] * self.n - round(p[1] * self.n))
        return max(dx, dy) > tol

    # -- band-limited test fields ----------------------------------------
    def random_bandlimited(self, rng, kmax=6, nmodes=8, amp=1.0):
        """Random real trigonometric polynomial; returns (values, modes).

        modes is a list of (kx, ky, a, b) meaning a*cos(2pi k.x) + b*sin(2pi k.x).
        """
        modes = []
        for _ in range(nmodes):
            while True:
                k = (int(rng.integers(-kmax, kmax + 1)), int(rng.integers(-kmax, kmax + 1)))
                if k != (0, 0):
                    break
            modes.append((k[0], k[1], float(rng.normal(0, amp)), float(rng.normal(0, amp))))
        return self.eval_modes(modes, self.X, self.Y), modes

    def eval_modes(self, modes, X, Y, laplacian=False):
        out = np.zeros_like(np.asarray(X, dtype=np.float64))
        for kx, ky, a, b in modes:
            phase = 2.0 * np.pi * (kx * X + ky * Y)
            term = a * np.cos(phase) + b * np.sin(phase)
            if laplacian:
                term = term * (2.0 * np.pi * (kx**2 + ky**2))
            out += term
        return out


class Sphere:
    """Round sphere of area 2*pi with a Gauss-Legendre x uniform grid.

    The grid oversamples the spectral truncation L (3/2-type rule) so that
    quadrature is exact for products of band-limited fields and pointwise
    nonlinearities alias weakly.
    """

    backend = "sphere"
    euler_char = 2
    curvature = 2.0  # Ric omega0 = 2 omega0 at r^2 = 1/2

    def __init__(self, L):
        if L < 15:
            raise ConfigError(f"sphere resolution must satisfy L >= 15, got {L}")
        self.L = int(L)
        self.r = np.sqrt(0.5)
        self.vol = VOL
        self.nlat = int(np.ceil(3 * (L + 1) / 2))
        nlon = 3 * (L + 1)
        self.nlon = nlon + (nlon % 2)
        self.shape = (self.nlat, self.nlon)
        self.h = np.pi * self.r / self.nlat  # typical node spacing (geodesic units)
        mu, w = np.polynomial.legendre.leggauss(self.nlat)
        self.mu = mu
        self.glweights = w
        self.theta = np.arccos(mu)
        self.phi = 2.0 * np.pi * np.arange(self.nlon) / self.nlon
        self._eig = 2.0 * np.arange(self.L + 1) * (np.arange(self.L + 1) + 1.0)
        self._plm = _legendre_table(self.L, self.mu)  # (L+1, nlat, L+1)
        # analysis tensor with a first-order Gram correction folded in:
        # quadrature rounding leaves analyze(synthesize) = I + E with
        # ||E|| ~ 1e-12 at high degree, and the Laplacian amplifies E by the
        # top eigenvalue; (2I - G) knocks the defect down to O(E^2 + eps)
        self._plm_w = np.zeros_like(self._plm)
        for m in range(self.L + 1):
            Pm = self._plm[m][:, m:]
            WPm = w[:, None] * Pm
            G = Pm.T @ WPm
            corr = 2.0 * np.eye(G.shape[0]) - G
            self._plm_w[m][:, m:] = WPm @ corr.T
        st = np.sin(self.theta)
        self._xyz = np.stack(
            [
                st[:, None] * np.cos(self.phi)[None, :],
                st[:, None] * np.sin(self.phi)[None, :],
                mu[:, None] * np.ones(self.nlon)[None, :],
            ],
            axis=-1,
        )

    # -- transforms -------------------------------------------------------
    def analyze(self, values):
        """Forward transform to coefficients a[l, m] for m >= 0."""
        F = np.fft.rfft(values, axis=1)[:, : self.L + 1]
        c = F * (np.sqrt(2.0 * np.pi) / self.nlon)
        return np.einsum("mil,im->lm", self._plm_w, c, optimize=True)

    def synthesize(self, coeffs):
        c = np.einsum("mil,lm->im", self._plm, coeffs, optimize=True)
        F = np.zeros((self.nlat, self.nlon // 2 + 1), dtype=np.complex128)
        F[:, : self.L + 1] = c * (self.nlon / np.sqrt(2.0 * np.pi))
        return np.fft.irfft(F, n=self.nlon, axis=1)

    def integrate(self, values):
        return float(
            self.r**2
            * (2.0 * np.pi / self.nlon)
            * np.dot(self.glweights, np.sum(values, axis=1))
        )

    def laplacian(self, values):
        # subtracting the mean kills the constant exactly; without it the
        # quadrature noise of the l=0 mode is amplified by the top eigenvalue
        vbar = self.integrate(values) / VOL
        a = self.analyze(values - vbar)
        return self.synthesize(a * self._eig[:, None])

    def solve_shifted(self, c, rhs):
        if c < 0:
            raise ConfigError("shifted solve requires c >= 0")
        a = self.analyze(rhs)
        if c < 1e-12:
            mean = float(np.sqrt(2.0) * np.sqrt(2.0 * np.pi) * a[0, 0].real) * self.r**2
            # a00 * Y00 integrated: integral = a00 * sqrt(4 pi) * r^2
            if abs(mean) > 1e-9 * max(1.0, float(np.max(np.abs(rhs)))):
                raise ConfigError(
                    f"c=0 solve needs mean-free rhs; integral = {mean:.3e}"
                )
            out = np.zeros_like(a)
            np.divide(a, (self._eig + c)[:, None], out=out,
                      where=(self._eig > 0)[:, None])
        else:
            out = a / (self._eig + c)[:, None]
        return self.synthesize(out)

    def solve_block_model(self, m, r1, r2):
        """Exact inverse of the constant-coefficient model system
        [[lap + m1, m2*lap], [m3, lap + m4]] per spherical-harmonic degree."""
        m1, m2, m3, m4 = m
        a1 = self.analyze(r1)
        a2 = self.analyze(r2)
        lam = self._eig[:, None]
        det = (lam + m1) * (lam + m4) - m2 * lam * m3
        x1 = ((lam + m4) * a1 - m2 * lam * a2) / det
        x2 = (-m3 * a1 + (lam + m1) * a2) / det
        return self.synthesize(x1), self.synthesize(x2)

    # -- geometry ----------------------------------------------------------
    def unit_point(self, p):
        """(lat, lon) in radians -> unit vector."""
        lat, lon = p
        return np.array(
            [np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)]
        )

    def distance_field(self, p):
        u = self.unit_point(p)
        cosang = np.clip(self._xyz @ u, -1.0, 1.0)
        return self.r * np.arccos(cosang)

    def cos_angle_field(self, p):
        u = self.unit_point(p)
        return np.clip(self._xyz @ u, -1.0, 1.0)

    def distance_points(self, a, b):
        ca = float(np.clip(self.unit_point(a) @ self.unit_point(b), -1.0, 1.0))
        return float(self.r * np.arccos(ca))

    def point_off_grid(self, p, tol=1e-9):
        d = self.distance_field(p)
        return float(np.min(d)) > tol

    # -- band-limited test fields ------------------------------------------
    def random_bandlimited(self, rng, kmax=6, nmodes=8, amp=1.0):
        """Random combination of low-degree real harmonics; returns (values, modes).

        modes is a list of (l, m, a, b) meaning a*Re(Ylm) + b*Im(Ylm) terms
        (orthonormalized on the unit sphere, evaluated on our grid).
        """
        modes = []
        for _ in range(nmodes):
            l = int(rng.integers(1, kmax + 1))
            m = int(rng.integers(0, l + 1))
            modes.append((l, m, float(rng.normal(0, amp)), float(rng.normal(0, amp))))
        return self.eval_modes_grid(modes), modes

    def eval_modes_grid(self, modes, laplacian=False):
        coeffs = np.zeros((self.L + 1, self.L + 1), dtype=np.complex128)
        for l, m, a, b in modes:
            scale = 2.0 * l * (l + 1.0) if laplacian else 1.0
            # a*Re(Ylm)+b*Im(Ylm) has coefficient (a - i b)/ (1 if m==0 else 2) * 2 ...
            if m == 0:
                coeffs[l, 0] += scale * (a + 0j)
            else:
                coeffs[l, m] += scale * 0.5 * (a - 1j * b)
        return self.synthesize(coeffs)

    def eval_modes_points(self, modes, theta, phi, laplacian=False):
        theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
        phi = np.atleast_1d(np.asarray(phi, dtype=np.float64))
        mu = np.cos(theta)
        out = np.zeros_like(mu)
        for l, m, a, b in modes:
            scale = 2.0 * l * (l + 1.0) if laplacian else 1.0
            plm = _legendre_point(l, m, mu)
            y = plm * np.exp(1j * m * phi) / np.sqrt(2.0 * np.pi)
            if m == 0:
                out += scale * a * y.real
            else:
                out += scale * (a * y.real + b * y.imag)
        return out


def _legendre_table(L, mu):
    """Normalized associated Legendre tensor P[m, i, l] with unit L2 norm on
    [-1, 1]; zero entries for l < m.

    The recurrence runs in extended precision: float64 accumulation leaves
    ~1e-14 cross-talk in the quadrature Gram matrix, which the top Laplacian
    eigenvalue amplifies into an O(L^2 * 1e-14) noise floor."""
    nlat = len(mu)
    mu = np.asarray(mu, dtype=np.longdouble)
    P = np.zeros((L + 1, nlat, L + 1), dtype=np.longdouble)
    s = np.sqrt(np.clip(1.0 - mu**2, 0.0, None))
    pmm = np.full(nlat, 1.0 / np.sqrt(np.longdouble(2.0)))
    for m in range(L + 1):
        P[m, :, m] = pmm
        if m < L:
            P[m, :, m + 1] = np.sqrt(np.longdouble(2 * m + 3)) * mu * pmm
        for l in range(m + 2, L + 1):
            a = np.sqrt(np.longdouble(4 * l * l - 1) / (l * l - m * m))
            b = np.sqrt(np.longdouble((l - 1) ** 2 - m * m)
                        / (4 * (l - 1) ** 2 - 1))
            P[m, :, l] = a * (mu * P[m, :, l - 1] - b * P[m, :, l - 2])
        if m < L:
            pmm = pmm * (-np.sqrt(np.longdouble(2 * m + 3) / (2 * m + 2))) * s
    return P.astype(np.float64)


def _legendre_point(l, m, mu):
    """Normalized P_l^m at arbitrary mu (vectorized)."""
    mu = np.asarray(mu, dtype=np.float64)
    s = np.sqrt(np.clip(1.0 - mu**2, 0.0, None))
    pmm = np.full_like(mu, 1.0 / np.sqrt(2.0))
    for k in range(m):
        pmm = pmm * (-np.sqrt((2.0 * k + 3.0) / (2.0 * k + 2.0))) * s
    if l == m:
        return pmm
    pm1 = np.sqrt(2.0 * m + 3.0) * mu * pmm
    if l == m + 1:
        return pm1
    for ll in range(m + 2, l + 1):
        a = np.sqrt((4.0 * ll * ll - 1.0) / (ll * ll - m * m))
        b = np.sqrt(((ll - 1.0) ** 2 - m * m) / (4.0 * (ll - 1.0) ** 2 - 1.0))
        pmm, pm1 = pm1, a * (mu * pm1 - b * pmm)
    return pm1


def build_surface(backend, resolution):
    """Construct a surface; torus needs even n >= 16, sphere needs L >= 15."""
    if backend == "torus":
        return Torus(resolution)
    if backend == "sphere":
        return Sphere(resolution)
    raise ConfigError(f"unknown backend {backend!r}")


def gradient_pairing(surface, f, g):
    """Dirichlet pairing <f, lap g> under quadrature.

    Equals 2 * integral of |grad^{1,0} f|^2 when f == g (under the
    positive-spectrum sign convention), and the polarized bilinear form
    otherwise.
    """
    lf = surface.laplacian(f)
    lg = surface.laplacian(g)
    return 0.5 * (surface.integrate(f * lg) + surface.integrate(g * lf))
