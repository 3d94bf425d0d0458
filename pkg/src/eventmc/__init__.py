"""eventmc: a miniature continuous-energy Monte Carlo transport engine.

History-based and event-based executors over a synthetic multi-nuclide
cross-section library, with particle sorting, fused macroscopic tallying,
an in-flight particle cap, deterministic parallel reduction, and a
domain-replication weak-scaling harness.  Results are bit-identical across
executors, lookup backends, event scheduling choices, and worker counts.
"""

from .errors import (ConfigurationError, EventMCError, GeometryError,
                     InvalidEnergyError, PhysicsError,
                     PopulationCollapseError, ReproducibilityError,
                     RunawayHistoryError, StatisticsError, StreamOverlapError,
                     UnknownMaterialError)
from .geometry import (BoundaryHit, CellId, Pincell, apply_boundary,
                       distance_to_boundary, locate)
from .presets import (ANALYTIC_K_INF, analytic_infinite_medium,
                      depleted_pincell)
from .replication import (ScalingRow, run_replicated, warm_up,
                          weak_scaling_study)
from .tally import KeffSeries, TallyLayout, finalize, reduce_batch
from .transport import (FissionBank, RunConfig, RunResult,
                        resample_fission_bank, run_event, run_history,
                        sample_collision_distance, sample_isotropic,
                        sort_lookup_queue)
from .xslib import (Library, MacroXS, Material, NuclideXS, UnionizedIndex,
                    build_unionized_index, generate_synthetic_library,
                    library_fingerprint, load_library, macro_lookup,
                    micro_lookup, save_library)

__version__ = "0.1.0"
