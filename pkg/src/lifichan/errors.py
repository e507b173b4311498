"""Exception types shared across the package."""


class LifichanError(Exception):
    """Base class for all package-specific errors."""


class GeometryError(LifichanError, ValueError):
    """Degenerate or physically invalid geometry (coincident points, bad vectors)."""


class InvalidResolutionError(LifichanError, ValueError):
    """Patch resolution outside the admissible range for the room."""


class CapacityError(LifichanError, RuntimeError):
    """Patch count would exceed the configured memory budget."""

    def __init__(self, n_patches: int, required_bytes: int, budget_bytes: int):
        self.n_patches = n_patches
        self.required_bytes = required_bytes
        self.budget_bytes = budget_bytes
        super().__init__(
            f"intrinsic operator for N={n_patches} patches needs about "
            f"{required_bytes / 1e6:.0f} MB which exceeds the memory budget of "
            f"{budget_bytes / 1e6:.0f} MB; coarsen dx or raise the budget "
            f"(LIFICHAN_MEMORY_BUDGET_MB)"
        )


class SceneMismatchError(LifichanError, ValueError):
    """Operator, field, or device does not belong to the scene it is used with."""


class GridMismatchError(LifichanError, ValueError):
    """Two responses do not share the same frequency grid."""


class DivergentCavityError(LifichanError, ValueError):
    """Average reflectivity >= 1 makes the diffuse tail diverge."""


class ScenarioError(LifichanError, ValueError):
    """Malformed scenario file; carries the location of the offending key."""

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class PoseError(LifichanError, ValueError):
    """Invalid receiver pose in a mobility sweep; carries the pose index."""

    def __init__(self, index: int, message: str):
        self.index = index
        super().__init__(f"pose {index}: {message}")
