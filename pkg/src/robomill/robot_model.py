"""Serial manipulator with virtual elastic joints.

The chain is a sequence of links. Link ``i`` contributes a constant
transform (translation ``xyz`` then fixed ``rpy`` rotation) followed by a
revolute joint about its local ``axis``. The actuated coordinate ``q_i``
and the virtual spring deflection ``theta_i`` act about the same axis, so
``d g / d q == d g / d theta``.

Node points are numbered 0..n. Node 0 is the origin of joint 1 (fixed to
the base), node ``j`` for ``0 < j < n`` is the origin of joint ``j+1`` and
node ``n`` is the tool centre point. Link ``j`` spans nodes ``j-1`` and
``j``; virtual joint ``k`` moves node ``j`` only when ``k <= j``.

Poses are 6-vectors ``(x, y, z, rx, ry, rz)``. The orientation part is
the rotation vector of ``R @ R_ref.T`` in the base frame, where ``R_ref``
is the rigid orientation of the same node at the reference configuration
``q_ref``. Jacobians are exact derivatives of that parametrisation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

TCP = "tcp"


@dataclass(frozen=True)
class LinkDescription:
    """Constant link transform followed by a revolute joint.

    Parameters
    ----------
    xyz : translation from the previous joint frame, m
    rpy : fixed roll-pitch-yaw rotation applied after the translation, rad
    axis : joint axis in the rotated frame (normalised on use)
    """

    xyz: tuple = (0.0, 0.0, 0.0)
    rpy: tuple = (0.0, 0.0, 0.0)
    axis: tuple = (0.0, 0.0, 1.0)


@dataclass
class JointConfig:
    q: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float)

    @classmethod
    def rigid(cls, q):
        q = np.asarray(q, dtype=float)
        return cls(q, np.zeros_like(q))


@dataclass
class ManipulatorDescription:
    """Geometry, joint compliances and mass data of a serial robot.

    ``joint_compliances`` holds the diagonal of ``K_theta^-1`` in
    rad/(N m), one entry per virtual joint (one per link).
    ``mass_centres`` gives, per link, the fractional position of the mass
    centre along the segment node ``j-1`` -> node ``j`` (lever rule).
    """

    links: list
    joint_compliances: np.ndarray
    link_masses: np.ndarray | None = None
    link_beams: list | None = None
    mass_centres: np.ndarray | None = None
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))
    tool: LinkDescription = field(default_factory=LinkDescription)
    q_ref: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.links)
        if n < 1:
            raise ValueError("a manipulator needs at least one link")
        self.joint_compliances = np.asarray(self.joint_compliances, dtype=float)
        if self.joint_compliances.shape != (n,):
            raise ValueError(
                f"expected {n} joint compliances, got {self.joint_compliances.shape}"
            )
        if np.any(self.joint_compliances <= 0):
            raise ValueError("joint compliances must be strictly positive")
        self.link_masses = (
            np.zeros(n) if self.link_masses is None else np.asarray(self.link_masses, float)
        )
        if self.link_masses.shape != (n,) or np.any(self.link_masses < 0):
            raise ValueError("link_masses must be n non-negative values")
        self.mass_centres = (
            np.full(n, 0.5) if self.mass_centres is None else np.asarray(self.mass_centres, float)
        )
        if self.mass_centres.shape != (n,):
            raise ValueError("mass_centres must have one entry per link")
        self.gravity = np.asarray(self.gravity, dtype=float)
        if self.link_beams is not None and len(self.link_beams) != n:
            raise ValueError("link_beams must have one entry per link")
        self.q_ref = np.zeros(n) if self.q_ref is None else np.asarray(self.q_ref, float)

        self._offsets = np.array([l.xyz for l in self.links], dtype=float)
        self._fixed_rot = np.array(
            [Rotation.from_euler("xyz", l.rpy).as_matrix() for l in self.links]
        )
        axes = np.array([l.axis for l in self.links], dtype=float)
        self._axes = axes / np.linalg.norm(axes, axis=1, keepdims=True)
        self._tool_xyz = np.asarray(self.tool.xyz, dtype=float)
        self._tool_rot = Rotation.from_euler("xyz", self.tool.rpy).as_matrix()
        *_, rots = _joint_frames(self, self.q_ref, np.zeros(n))
        self._ref_rot = rots

    @property
    def n(self):
        return len(self.links)

    @property
    def n_theta(self):
        return len(self.links)

    @property
    def stiffness(self):
        """``K_theta`` as a dense diagonal matrix, N m/rad."""
        return np.diag(1.0 / self.joint_compliances)


def _rodrigues(axis, angle):
    x, y, z = axis
    c, s = np.cos(angle), np.sin(angle)
    C = 1.0 - c
    return np.array(
        [
            [c + x * x * C, x * y * C - z * s, x * z * C + y * s],
            [y * x * C + z * s, c + y * y * C, y * z * C - x * s],
            [z * x * C - y * s, z * y * C + x * s, c + z * z * C],
        ]
    )


def _joint_frames(model, q, theta):
    """Joint origins, world joint axes, node positions and rotations."""
    n = model.n
    angles = np.asarray(q, float) + np.asarray(theta, float)
    origins = np.empty((n, 3))
    axes = np.empty((n, 3))
    pos = np.zeros((n + 1, 3))
    rot = np.empty((n + 1, 3, 3))
    R = np.eye(3)
    p = np.zeros(3)
    for i in range(n):
        p = p + R @ model._offsets[i]
        R = R @ model._fixed_rot[i]
        origins[i] = p
        axes[i] = R @ model._axes[i]
        if i == 0:
            rot[0] = R
        pos[i] = p
        R = R @ _rodrigues(model._axes[i], angles[i])
        rot[i + 1] = R
    pos[n] = p + R @ model._tool_xyz
    rot[n] = R @ model._tool_rot
    return origins, axes, pos, rot


def log_so3(R):
    """Rotation vector of a rotation matrix."""
    w = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    s = 0.5 * np.linalg.norm(w)
    a = np.arctan2(s, 0.5 * (np.trace(R) - 1.0))
    if a > np.pi - 1e-3:
        return Rotation.from_matrix(R).as_rotvec()
    if a < 1e-6:
        return 0.5 * w * (1.0 + a * a / 6.0)
    return w * (a / (2.0 * s))


def _skew(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def inv_left_jacobian_so3(phi):
    """Maps spatial angular velocity to the rate of the rotation vector."""
    a = np.linalg.norm(phi)
    P = _skew(phi)
    if a < 1e-6:
        return np.eye(3) - 0.5 * P + (P @ P) / 12.0
    coef = 1.0 / a**2 - (1.0 + np.cos(a)) / (2.0 * a * np.sin(a))
    return np.eye(3) - 0.5 * P + coef * (P @ P)


def _check_node(model, node):
    if node is None or node == TCP:
        return model.n
    if not isinstance(node, (int, np.integer)) or node < 0 or node > model.n:
        raise IndexError(f"node index {node!r} out of range 0..{model.n}")
    return int(node)


def _pose(model, j, pos, rot):
    return np.concatenate([pos[j], log_so3(rot[j] @ model._ref_rot[j].T)])


def forward_kinematics(model, cfg, node=TCP):
    """Pose of node point ``node`` (1..n, or ``TCP``)."""
    j = _check_node(model, node)
    _, _, pos, rot = _joint_frames(model, cfg.q, cfg.theta)
    return _pose(model, j, pos, rot)


def kinematics(model, cfg):
    """Poses ``(n+1, 6)`` and Jacobians ``(n+1, 6, n_theta)`` of all nodes.

    Row ``j`` refers to node ``j``; node 0 has a zero Jacobian.
    """
    n = model.n
    origins, axes, pos, rot = _joint_frames(model, cfg.q, cfg.theta)
    poses = np.empty((n + 1, 6))
    jacs = np.zeros((n + 1, 6, n))
    for j in range(n + 1):
        phi = log_so3(rot[j] @ model._ref_rot[j].T)
        poses[j, :3] = pos[j]
        poses[j, 3:] = phi
        if j == 0:
            continue
        jacs[j, :3, :j] = np.cross(axes[:j], pos[j] - origins[:j]).T
        jacs[j, 3:, :j] = inv_left_jacobian_so3(phi) @ axes[:j].T
    return poses, jacs


def node_jacobian(model, cfg, node=TCP):
    """``d g_node / d theta`` as a 6 x n_theta matrix.

    Columns of virtual joints located after the node are exactly zero.
    """
    j = _check_node(model, node)
    _, jacs = kinematics(model, cfg)
    return jacs[j]


def gravity_loading(model, cfg=None, include_base=False):
    """Link weights split onto the link end nodes by the lever rule.

    Returns the stacked 6-vectors ``G_1 .. G_n`` (``G_0 .. G_n`` when
    ``include_base``). Moment components are zero. With the mass centre at
    a fixed fraction of each link the split does not depend on ``cfg``.
    """
    n = model.n
    G = np.zeros((n + 1, 6))
    for j in range(n):
        w = model.link_masses[j] * model.gravity
        s = model.mass_centres[j]
        G[j, :3] += (1.0 - s) * w
        G[j + 1, :3] += s * w
    return G.ravel() if include_base else G[1:].ravel()


def _torque_map(model, cfg, F, G):
    _, jacs = kinematics(model, cfg)
    G = np.asarray(G, float).reshape(model.n, 6)
    tau = jacs[model.n].T @ F
    for j in range(1, model.n + 1):
        tau = tau + jacs[j].T @ G[j - 1]
    return tau


def loading_hessian(model, cfg, F, G, dG=None, step=1e-6):
    """``H_theta_theta`` of the external and auxiliary loadings.

    Second derivatives are central differences of the analytic Jacobians
    with step ``step`` (rad). ``dG`` is ``d G / d theta`` (6n x n_theta);
    ``None`` means the auxiliary loading does not depend on ``theta``.
    """
    F = np.asarray(F, float)
    G = np.asarray(G, float)
    n = model.n_theta
    if F.shape != (6,) or G.shape != (6 * model.n,):
        raise ValueError("F must be a 6-vector and G a 6n-vector")
    H = np.empty((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = step
        tp = _torque_map(model, JointConfig(cfg.q, cfg.theta + e), F, G)
        tm = _torque_map(model, JointConfig(cfg.q, cfg.theta - e), F, G)
        H[:, k] = (tp - tm) / (2.0 * step)
    if dG is not None:
        _, jacs = kinematics(model, cfg)
        JG = np.concatenate([jacs[j] for j in range(1, model.n + 1)], axis=0)
        H = H + JG.T @ np.asarray(dG, float)
    return 0.5 * (H + H.T)


def inverse_kinematics(model, target, q_init, node=TCP, tol=1e-12, max_iter=50):
    """Actuated coordinates placing the rigid chain node at ``target``."""
    j = _check_node(model, node)
    q = np.array(q_init, dtype=float)
    zero = np.zeros(model.n)
    target = np.asarray(target, float)
    for _ in range(max_iter):
        poses, jacs = kinematics(model, JointConfig(q, zero))
        err = target - poses[j]
        if np.linalg.norm(err) < tol:
            return q
        dq, *_ = np.linalg.lstsq(jacs[j], err, rcond=None)
        q = q + dq
    poses, _ = kinematics(model, JointConfig(q, zero))
    if np.linalg.norm(target - poses[j]) > 1e3 * tol:
        from .errors import NonConvergence

        raise NonConvergence(
            "inverse kinematics did not converge",
            residual=float(np.linalg.norm(target - poses[j])),
            iterations=max_iter,
        )
    return q
