#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fiberalloc/config.hpp"
#include "fiberalloc/dual_actuator.hpp"
#include "fiberalloc/solvers.hpp"

namespace fiberalloc {

// Everything one experiment run produced, self-describing: the echoed config
// plus the seed reproduce every numeric cell. `timestamp` is the only field
// excluded from byte-for-byte determinism comparisons.
struct ResultBundle {
  ExperimentConfig config;
  std::vector<std::string> regime_names;  // per regime index
  std::vector<double> sweep_values;       // per wrench index (sweep tasks only)
  std::vector<SweepCell> cells;           // regime-major, matching sweep()
  double wall_seconds = 0.0;
  std::string timestamp;                  // ISO-8601 UTC
  bool all_ok() const;
};

// Runs the configured wrench grid under every configured regime: both
// single-objective solves per cell, cross-evaluations, and optionally fronts.
ResultBundle run_sweep_experiment(const ExperimentConfig& config);

// JSON bundle: {"schema": 1, "timestamp": ..., "config": ..., "cells": [...]}.
std::string bundle_to_json(const ResultBundle& bundle);

// One row per (regime, sweep value, rotor): regime,tau_x,rotor,u_energy,u_promptness
std::string allocations_csv(const ResultBundle& bundle);
// One row per (regime, sweep value) with both costs evaluated at both optima.
std::string costs_csv(const ResultBundle& bundle);
// One row per front point of every cell that carries a front.
std::string fronts_csv(const ResultBundle& bundle);

// Writes the formats enabled in the config into dir; returns written paths.
std::vector<std::string> write_bundle(const ResultBundle& bundle, const std::string& dir);

enum class PlotKind { AllocationVsSweep, CostVsSweep, ParetoFront, DualFields, DualProfiles };

// Accepts "allocation-vs-sweep", "cost-vs-sweep", "pareto-front",
// "dual-fields", "dual-profiles"; throws std::invalid_argument otherwise.
PlotKind plot_kind_from_string(const std::string& name);

// CSV + minimal SVG renderings. The bundle overload serves the sweep-derived
// kinds; the dual overload serves the two-actuator field/profile kinds.
// Requesting a kind the source cannot provide throws std::invalid_argument.
std::vector<std::string> emit_plotdata(const ResultBundle& bundle, PlotKind kind,
                                       const std::string& dir);
std::vector<std::string> emit_plotdata(const DualSystem& ds, PlotKind kind,
                                       const std::string& dir);

struct CheckItem {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Fast invariant suite behind the `check` subcommand.
std::vector<CheckItem> run_self_checks(std::uint64_t seed);

}  // namespace fiberalloc
