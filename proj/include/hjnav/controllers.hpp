#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "hjnav/hjsolver.hpp"
#include "hjnav/terrain.hpp"

namespace hjnav {

/// Heading/magnitude actuation. magnitude is 0 or u_max.
struct ControlInput {
  double heading = 0.0;    // radians, counterclockwise from +x
  double magnitude = 0.0;  // m/s

  Vec2 vector() const {
    return {magnitude * std::cos(heading), magnitude * std::sin(heading)};
  }
};

/// Gradient norms below this are treated as a flat value function (cost/m).
inline constexpr double kGradEps = 1e-8;

/// Spatial gradient of J at (x, t): central differences per node (one-sided
/// next to sentinel nodes and the grid edge), bilinear in space over the
/// non-sentinel corners, linear in time. Throws ExtentError off the grid,
/// StrandedError if the nearest node is sentinel at t.
Vec2 value_gradient(const ValueFunction& J, Vec2 x, double t);

/// u = -u_max grad J / |grad J|, or zero actuation when |grad J| < kGradEps.
ControlInput mtr_policy(const ValueFunction& J, Vec2 x, double t, double u_max);

ControlInput floating_policy();

/// Safety override of the switching controllers: full actuation up the
/// distance-map gradient when dmap(x) < threshold and the gradient is not
/// degenerate, otherwise nullopt (delegate to the inner controller).
std::optional<ControlInput> safety_override(const DistanceMap& dmap, double threshold, Vec2 x,
                                            double u_max);

ControlInput switching_policy(const std::function<ControlInput(Vec2, double)>& inner,
                              const DistanceMap& dmap, double threshold, Vec2 x, double t,
                              double u_max);

enum class ControllerKind { Floating, MTR, MTRNoObs, SwitchMTR, SwitchMTRNoObs, SmallDistMTR };

std::string_view to_string(ControllerKind kind);
/// Accepts the display names ("MTR-no-Obs", "SmallDist-MTR", ...), case-insensitive.
ControllerKind parse_controller_kind(std::string_view name);

/// Which part of a controller produced a control.
enum class Branch { Float, MTR, Safety, Escape };
std::string_view to_string(Branch b);

struct ControllerInputs {
  /// Solver settings for replanning; its grid is the planning grid.
  SolverConfig solver;
  /// Obstacles known to the planner (MTR, Switch-MTR, SmallDist-MTR).
  std::optional<ObstacleMask> obstacles;
  /// Distance-to-obstacle map for the switching variants.
  std::optional<DistanceMap> distance;
  double switch_threshold = 20000.0;  // m
  double small_disturbance = 0.05;    // m/s, SmallDist-MTR's d_max
  /// The planner's obstacles are the known ones dilated by this many cells,
  /// so planned paths keep clear of the cell areas that count as stranding.
  int margin_cells = 1;
};

struct Decision {
  ControlInput u;
  Branch branch = Branch::Float;
};

/// Feedback controller for one mission. Holds the latest value function;
/// replan() swaps in a fresh solve.
class Controller {
 public:
  ControllerKind kind() const { return kind_; }
  double u_max() const { return cfg_.u_max; }
  const SolverConfig& solver_config() const { return cfg_; }
  const ObstacleMask& planning_mask() const { return mask_; }
  const TargetSpec& target() const { return target_; }
  bool plans() const { return kind_ != ControllerKind::Floating; }

  /// Solves on `forecast` over [t, t_end]. A no-op for Floating.
  void replan(const FlowSource& forecast, double t, double t_end);

  /// Control at the true state. MTR variants must have replanned first
  /// (ConfigError otherwise). When the state sits on a sentinel cell of the
  /// current plan the controller heads for the nearest live node.
  Decision control(Vec2 x, double t) const;

  /// Latest plan, null before the first replan or for Floating.
  std::shared_ptr<const ValueFunction> plan() const { return plan_; }

 private:
  friend Controller build_controller(ControllerKind, const ControllerInputs&, const TargetSpec&);
  Controller(ControllerKind kind, SolverConfig cfg, ObstacleMask mask,
             std::optional<DistanceMap> dmap, double threshold, TargetSpec target);
  Decision escape(Vec2 x, double t) const;

  ControllerKind kind_;
  SolverConfig cfg_;
  ObstacleMask mask_;
  std::optional<DistanceMap> dmap_;
  double threshold_;
  TargetSpec target_;
  std::shared_ptr<const ValueFunction> plan_;
};

/// Throws ConfigError when the kind needs an obstacle mask or distance map
/// that `inputs` lacks.
Controller build_controller(ControllerKind kind, const ControllerInputs& inputs,
                            const TargetSpec& target);

}  // namespace hjnav
