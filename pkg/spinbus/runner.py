"""
Subcommand orchestration

A Runner owns one output directory, one log file and one character cache,
and turns a validated RunConfig into a ResultBundle of tables.
"""

import math
import os
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .circuit_map import (
    beta_c,
    calibrate_fx_for_delta,
    chain_from_circuit,
    delta_sensitivity,
    extract_character,
    mutual_for_coupling,
    spin_parameters_from_circuit,
)
from .config import RunConfig
from .eigensolver import solve_chain
from .exceptions.errors import ConfigError, FitError, LevelIdentificationError
from .experiments import (
    default_source_grid,
    flux_propagation,
    j_eff_from_susceptibility,
    slope_uncertainty,
    spectral_splitting,
    susceptibility_curve,
    two_level_response,
)
from .fixtures import chain_fixture, circuit_fixture
from .hierarchy import GroupingPlan, convergence_sweep
from .noise_mc import NoiseSpec, noisy_spectrum_ensemble
from .perturbation import effective_coupling, j_eff_second_order_sum
from .serialize import ResultBundle, ResultTable, write_bundle
from .spectrum_cache import CharacterCache
from .spin_model import ChainSpec
from .storage import RunStorage
from .utils.logger import Logger

DEFAULT_FX = tuple(round(0.10 + 0.01 * i, 2) for i in range(13))


@dataclass(frozen=True)
class FamilyMember:
    """
    One point of a chain family sweep.

    column is the (name, unit) of the swept quantity; currents (nA) and
    sensitivity (GHz/Phi0, x-loop) are per site of chain; coupler_response is
    d<I_z>/df_z of a single coupler (nA/Phi0); mutual_qc in pH.
    """

    column: Tuple[str, str]
    value: object
    chain: ChainSpec
    currents: np.ndarray
    coupler_response: float
    mutual_qc: float
    sensitivity: Optional[np.ndarray] = None


def _timestamp():
    return time.strftime('%Y-%m-%dT%H:%M:%S')


class Runner:
    def __init__(self, config: RunConfig, logger=None, cache=None, verbose=False):
        self.config = config
        self.storage = RunStorage(config.out_dir)
        self.logger = logger or Logger(
            os.path.join(config.out_dir, "logs", "run.log"), verbose=verbose
        )
        self.cache = cache if cache is not None else CharacterCache()
        self.bundle = ResultBundle(config.experiment, config.config_hash, config.seed)
        self._handlers: Dict[str, Callable[[], None]] = {
            "spectrum": self.spectrum,
            "coupler-character": self.coupler_character,
            "flux-propagation": self.flux_propagation,
            "susceptibility": self.susceptibility,
            "jeff-compare": self.jeff_compare,
            "noise": self.noise,
            "hierarchy-bench": self.hierarchy_bench,
        }

    @property
    def threads(self) -> int:
        return self.config.threads

    def run(self) -> ResultBundle:
        """
        Execute the configured experiment and persist its tables.

        The RUN_INCOMPLETE marker is written before any computation and
        removed only after every table and metadata.json are on disk, so an
        exception leaves the marker behind.
        """
        self.storage.begin(self.config.config_hash)
        self.bundle.started = _timestamp()
        self.logger.info(
            f"Running '{self.config.experiment}' (config {self.config.config_hash[:12]}, "
            f"seed {self.config.seed}, threads {self.threads})"
        )
        self._handlers[self.config.experiment]()
        self.bundle.finished = _timestamp()
        stats = self.cache.get_stats()
        if stats["hits"] or stats["misses"]:
            self.bundle.notes["character_cache"] = (
                f"{stats['hits']} hits / {stats['misses']} misses"
            )
        write_bundle(self.bundle, self.storage)
        self.storage.complete()
        self.logger.info(f"Wrote {len(self.bundle.tables)} table(s) to {self.storage.folder}")
        return self.bundle

    # ----------- Chain families ------------

    def base_chain(self) -> Tuple[str, ChainSpec]:
        """The explicit `chain` section if present, else the named fixture."""
        data = self.config.data
        if data.get("chain") is not None:
            return "chain", ChainSpec.from_dict(data["chain"])
        return data["fixture"], chain_fixture(data["fixture"])

    def _base_member(self) -> FamilyMember:
        name, chain = self.base_chain()
        i_p = self.config.section("sweep")["persistent_current"]
        couplers = chain.coupler_indices()
        delta_c = chain.sites[couplers[0]].delta if couplers else 0.0
        return FamilyMember(
            column=("fixture", ""),
            value=name,
            chain=chain,
            currents=np.full(chain.n_sites, i_p),
            coupler_response=two_level_response(i_p, delta_c) if delta_c > 0 else math.nan,
            mutual_qc=math.nan,
        )

    def ratio_family(self) -> List[FamilyMember]:
        """Homogeneous q1 - c1..cN - q2 chains with J_cc = ratio * Delta_c / 2."""
        sweep = self.config.section("sweep")
        i_p = sweep["persistent_current"]
        members = []
        for ratio in sweep["ratios"]:
            chain = ChainSpec.qubit_bus(
                sweep["n_couplers"], sweep["delta_c"], ratio * sweep["delta_c"] / 2.0,
                sweep["delta_q"], sweep["j_qc"],
            )
            members.append(FamilyMember(
                column=("ratio", ""),
                value=float(ratio),
                chain=chain,
                currents=np.full(chain.n_sites, i_p),
                coupler_response=two_level_response(i_p, sweep["delta_c"]),
                mutual_qc=mutual_for_coupling(sweep["j_qc"], i_p, i_p),
            ))
        return members

    def _character(self, params, f_x: float):
        circuit = self.config.section("circuit")
        return extract_character(params, f_x, basis_size=circuit["basis_size"],
                                 cache=self.cache, logger=self.logger)

    def fx_family(self, fx_values=None, with_sensitivity: bool = False) -> List[FamilyMember]:
        """
        Chains built from circuit characters at each coupler x-loop bias.

        The qubits sit at the x-loop bias that gives circuit.qubit_delta and
        keep it across the sweep.
        """
        circuit = self.config.section("circuit")
        fx_values = list(fx_values if fx_values is not None else (circuit["fx"] or DEFAULT_FX))
        coupler = circuit_fixture(circuit["coupler"])
        qubit = circuit_fixture(circuit["qubit"])
        size = circuit["basis_size"]

        fx_q = calibrate_fx_for_delta(qubit["params"], circuit["qubit_delta"], basis_size=size)
        qubit_char = self._character(qubit["params"], fx_q)
        self.logger.info(
            f"Qubit '{qubit['params'].name}' at f_x = {fx_q:.6f} Phi0: "
            f"Delta = {qubit_char.delta:.6g} GHz, I_p = {qubit_char.persistent_current:.6g} nA"
        )
        if with_sensitivity:
            qubit_sens = delta_sensitivity(qubit["params"], fx_q, basis_size=size)

        n = circuit["n_couplers"]
        members = []
        for f_x in fx_values:
            char = self._character(coupler["params"], f_x)
            chain = chain_from_circuit(char, qubit_char, coupler["M_cc"], qubit["M_qc"], n)
            currents = np.array(
                [qubit_char.persistent_current] + [char.persistent_current] * n
                + [qubit_char.persistent_current]
            )
            sens = None
            if with_sensitivity:
                c_sens = delta_sensitivity(coupler["params"], f_x, basis_size=size)
                sens = np.array([qubit_sens] + [c_sens] * n + [qubit_sens])
            self.logger.debug(
                f"f_x = {f_x:.4f}: Delta_c = {char.delta:.6g} GHz, "
                f"J_cc = {chain.couplings.coupling(1, 2):.6g} GHz"
            )
            members.append(FamilyMember(
                column=("f_x", "Phi0"),
                value=float(f_x),
                chain=chain,
                currents=currents,
                coupler_response=char.d_iz_d_fz,
                mutual_qc=qubit["M_qc"],
                sensitivity=sens,
            ))
        return members

    def family(self, with_sensitivity: bool = False) -> List[FamilyMember]:
        """sweep.ratios wins over circuit.fx; with neither the base chain is used alone."""
        if self.config.section("sweep")["ratios"]:
            if with_sensitivity:
                raise ConfigError("x-loop noise needs a circuit f_x sweep, not sweep.ratios")
            return self.ratio_family()
        if self.config.section("circuit")["fx"]:
            return self.fx_family(with_sensitivity=with_sensitivity)
        if with_sensitivity:
            raise ConfigError("x-loop noise needs a circuit f_x sweep")
        return [self._base_member()]

    @staticmethod
    def _couplers(member: FamilyMember) -> Tuple[ChainSpec, np.ndarray]:
        indices = member.chain.coupler_indices()
        if not indices:
            raise ConfigError("The chain has no coupler sites")
        return member.chain.couplers_only(), member.currents[indices]

    # ----------- Subcommands ------------

    def spectrum(self):
        solver = self.config.section("solver")
        _, chain = self.base_chain()
        k = solver["levels"] or None
        if k is not None:
            k = min(k, chain.dimension)
        result = solve_chain(chain, k=k, method=solver["method"])
        table = self.bundle.add(ResultTable(
            "spectrum", [("level", ""), ("energy", "GHz"), ("transition", "GHz")],
            provenance="eigensolver.solve_chain",
        ))
        for level, (energy, transition) in enumerate(zip(result.energies,
                                                         result.transition_energies())):
            table.add_row(level, float(energy), float(transition))

    def coupler_character(self):
        circuit = self.config.section("circuit")
        coupler = circuit_fixture(circuit["coupler"])
        params = coupler["params"]
        fx_values = circuit["fx"] or list(DEFAULT_FX)

        summary = self.bundle.add(ResultTable(
            "coupler_character",
            [("f_x", "Phi0"), ("delta", "GHz"), ("persistent_current", "nA"), ("j_cc", "GHz"),
             ("beta_c", ""), ("d_iz_d_fz", "nA/Phi0"), ("chi_local", "nA/Phi0"),
             ("symmetry_point", "Phi0"), ("basis_size", ""), ("sigmoid_converged", "")],
            provenance="circuit_map.extract_character; circuit_map.spin_parameters_from_circuit",
        ))
        curves = self.bundle.add(ResultTable(
            "iz_curves", [("f_x", "Phi0"), ("f_z", "Phi0"), ("iz", "nA")],
            provenance="circuit_map.ground_current",
        ))
        gaps, couplings = [], []
        for f_x in fx_values:
            char = self._character(params, f_x)
            j_cc = spin_parameters_from_circuit(char, char, coupler["M_cc"])
            gaps.append(char.delta)
            couplings.append(j_cc)
            summary.add_row(float(f_x), char.delta, char.persistent_current, j_cc, char.beta_c,
                            char.d_iz_d_fz, char.chi_local, char.symmetry_point,
                            char.basis_size, char.sigmoid_converged)
            for f_z, iz in zip(char.f_z_grid, char.iz_ground_curve):
                curves.add_row(float(f_x), f_z, iz)

        crossing = self.bundle.add(ResultTable(
            "crossing", [("f_x_star", "Phi0"), ("beta_c", ""), ("delta", "GHz")],
            provenance="linear interpolation of j_cc - delta / 2 on the f_x grid",
        ))
        diff = np.array(couplings) - 0.5 * np.array(gaps)
        for i in range(len(diff) - 1):
            if diff[i] == 0.0 or diff[i] * diff[i + 1] < 0:
                t = diff[i] / (diff[i] - diff[i + 1]) if diff[i] != diff[i + 1] else 0.0
                f_star = fx_values[i] + t * (fx_values[i + 1] - fx_values[i])
                delta = gaps[i] + t * (gaps[i + 1] - gaps[i])
                crossing.add_row(float(f_star), beta_c(params, f_star), float(delta))
        if not crossing.rows:
            self.logger.warn("J_cc and Delta_c / 2 do not cross on the f_x grid")

    def flux_propagation(self):
        sweep = self.config.section("sweep")
        table = None
        for member in self.family():
            chain, currents = self._couplers(member)
            signal = flux_propagation(chain, sweep["source"], currents,
                                      source_offset=sweep["half_width"], threads=self.threads)
            if table is None:
                table = self.bundle.add(ResultTable(
                    "flux_propagation",
                    [member.column, ("source", ""), ("target", ""), ("distance", ""),
                     ("magnitude", "mPhi0")],
                    provenance="experiments.flux_propagation",
                ))
            source_label = chain.sites[signal.source_site].label
            for target, magnitude in zip(signal.targets, signal.magnitudes):
                table.add_row(member.value, source_label, chain.sites[target].label,
                              abs(target - signal.source_site), magnitude)
            self.logger.info(
                f"{member.column[0]} = {member.value}: largest signal "
                f"{max(signal.magnitudes, default=0.0):.4g} mPhi0"
            )

    def _curve(self, chain, currents, source, target):
        sweep = self.config.section("sweep")
        grid = default_source_grid(sweep["points"], sweep["half_width"])
        curve = susceptibility_curve(chain, source, target, grid, currents,
                                     threads=self.threads, logger=self.logger)
        spread = slope_uncertainty(curve, sweep["jitter"], sweep["resamples"],
                                   seed=self.config.seed, logger=self.logger)
        return curve, spread

    def susceptibility(self):
        sweep = self.config.section("sweep")
        curves = slopes = None
        for member in self.family():
            chain, currents = self._couplers(member)
            curve, spread = self._curve(chain, currents, sweep["source"], sweep["target"])
            if curves is None:
                curves = self.bundle.add(ResultTable(
                    "susceptibility_curves",
                    [member.column, ("source_bias", "Phi0"), ("target_symmetry_point", "Phi0")],
                    provenance="experiments.susceptibility_curve",
                ))
                slopes = self.bundle.add(ResultTable(
                    "susceptibility_slopes",
                    [member.column, ("slope", ""), ("slope_std", ""), ("fit_residual", "Phi0"),
                     ("converged", ""), ("failed_resamples", "")],
                    provenance="fitting.fit_sigmoid; experiments.slope_uncertainty",
                ))
            for x, y in zip(curve.source_bias, curve.target_symmetry_point):
                curves.add_row(member.value, x, y)
            slopes.add_row(member.value, curve.midpoint_slope, spread.std, curve.fit_residual,
                           curve.fit.converged, spread.n_failed)

    def jeff_compare(self):
        if self.config.section("sweep")["ratios"]:
            members = self.ratio_family()
        else:
            members = self.fx_family(self.config.section("circuit")["fx"] or DEFAULT_FX)
        table = None
        for member in members:
            full = member.chain
            if len(full.qubit_indices()) != 2:
                raise ConfigError("jeff-compare needs a chain with two end qubits")
            chain, currents = self._couplers(member)
            last = full.n_sites - 1
            j1 = full.couplings.coupling(0, 1)
            j2 = full.couplings.coupling(last - 1, last)
            i_q1, i_q2 = member.currents[0], member.currents[last]

            curve, _ = self._curve(chain, currents, -1, 0)
            try:
                j_sus = j_eff_from_susceptibility(curve.confident_slope, member.coupler_response,
                                                  i_q1, i_q2, member.mutual_qc, member.mutual_qc)
            except FitError as e:
                self.logger.warn(f"{member.column[0]} = {member.value}: {e}")
                j_sus = math.nan
            j_pert = j_eff_second_order_sum(chain, j1, j2, qubit_delta=full.sites[0].delta)
            gap = effective_coupling(chain, j1, j2)
            try:
                half_split = 0.5 * spectral_splitting(full)
            except LevelIdentificationError as e:
                self.logger.warn(f"{member.column[0]} = {member.value}: {e}")
                half_split = math.nan

            if table is None:
                table = self.bundle.add(ResultTable(
                    "jeff_compare",
                    [member.column, ("slope", ""), ("converged", ""), ("j_eff_susceptibility", "GHz"),
                     ("j_eff_splitting", "GHz"), ("j_eff_perturbative", "GHz"),
                     ("j_eff_gap_approx", "GHz"), ("omega_c", "GHz")],
                    provenance=(
                        "experiments.j_eff_from_susceptibility; experiments.spectral_splitting / 2; "
                        "perturbation.j_eff_second_order_sum; perturbation.effective_coupling"
                    ),
                ))
            table.add_row(member.value, curve.midpoint_slope, curve.converged, j_sus, half_split,
                          j_pert, gap.j_eff_gap_approx, gap.omega_c)

    def noise(self):
        section = self.config.section("noise")
        spec = NoiseSpec(
            amplitude=section["amplitude"], alpha=section["alpha"],
            f_low=section["f_low"], f_high=section["f_high"], include_x=section["include_x"],
        )
        levels = linewidth = None
        for member in self.family(with_sensitivity=spec.include_x):
            stats = noisy_spectrum_ensemble(
                member.chain, spec, n_runs=section["n_runs"], seed=self.config.seed,
                currents=member.currents, delta_sensitivity=member.sensitivity,
                n_levels=min(section["n_levels"], member.chain.dimension),
                threads=self.threads, logger=self.logger,
            )
            if levels is None:
                levels = self.bundle.add(ResultTable(
                    "noise_levels",
                    [member.column, ("level", ""), ("noiseless", "GHz"), ("mean", "GHz"),
                     ("std", "GHz"), ("mean_transition", "GHz"), ("std_transition", "GHz")],
                    provenance="noise_mc.noisy_spectrum_ensemble",
                ))
                linewidth = self.bundle.add(ResultTable(
                    "noise_linewidth",
                    [member.column, ("qubit_level", ""), ("linewidth", "GHz"),
                     ("rms_offset", "uPhi0"), ("ambiguous_runs", ""), ("qubit_identified", ""),
                     ("unidentified_runs", "")],
                    provenance="noise_mc.rms_flux_offset; NoiseEnsembleStats.qubit_linewidth",
                ))
            for level in range(stats.n_levels):
                levels.add_row(member.value, level, stats.noiseless_energies[level],
                               stats.mean_energies[level], stats.std_energies[level],
                               stats.mean_transitions[level], stats.std_transitions[level])
            has_qubit = stats.qubit_level is not None
            linewidth.add_row(
                member.value,
                stats.qubit_level if has_qubit else -1,
                stats.qubit_linewidth if has_qubit else math.nan,
                stats.rms_offset,
                sum(1 for a in stats.ambiguous_levels if a),
                stats.qubit_identified,
                stats.unidentified_runs,
            )

    def hierarchy_bench(self):
        section = self.config.section("hierarchy")
        if self.config.section("sweep")["ratios"]:
            members = self.ratio_family()
        else:
            members = [self._base_member()]
        convergence = summary = None
        for member in members:
            chain = member.chain
            sizes = section["group_sizes"]
            if sum(sizes) != chain.n_sites:
                raise ConfigError(
                    f"hierarchy.group_sizes {sizes} sum to {sum(sizes)}, chain has {chain.n_sites} sites"
                )
            plan = GroupingPlan.from_sizes(sizes, max(section["k_ladder"]))
            result = convergence_sweep(chain, plan, section["k_ladder"],
                                       n_levels=section["n_levels"], threads=self.threads)
            if convergence is None:
                convergence = self.bundle.add(ResultTable(
                    "hierarchy_convergence",
                    [member.column, ("kept", ""), ("composite_dimension", ""),
                     ("max_error", "GHz"), ("ground_error", "GHz")],
                    provenance="hierarchy.convergence_sweep",
                ))
                summary = self.bundle.add(ResultTable(
                    "hierarchy_summary",
                    [member.column, ("smallest_k", ""), ("tolerance", "GHz"),
                     ("exact_ground", "GHz")],
                    provenance="ConvergenceTable.smallest_k",
                ))
            for row in result.rows:
                convergence.add_row(member.value, row.kept, row.composite_dimension,
                                    row.max_error, row.ground_error)
            smallest = result.smallest_k(section["tolerance"])
            summary.add_row(member.value, -1 if smallest is None else smallest,
                            section["tolerance"], float(result.exact_energies[0]))
