#ifndef KYLE_STRATEGY_HPP
#define KYLE_STRATEGY_HPP

#include <functional>
#include <vector>

namespace kyle {

enum class StrategyKind { Equilibrium, Scaled, Zero, Jump, CustomDrift };

struct JumpEvent {
    double time = 0.0;
    double size = 0.0;  // block added to the insider position
};

/// Insider trading strategy: a drift rate plus finitely many scheduled
/// blocks. The equilibrium strategy trades at the bridge rate and never
/// jumps; deviations scale that rate, stop trading, or add blocks.
struct Strategy {
    StrategyKind kind = StrategyKind::Equilibrium;
    StrategyKind base = StrategyKind::Equilibrium;  // drift used between jumps
    double scale = 1.0;
    std::vector<JumpEvent> jumps;
    std::function<double(double, double, double)> drift;  // (t, xi, z) -> rate

    static Strategy equilibrium() { return {}; }
    static Strategy zero() {
        Strategy s;
        s.kind = StrategyKind::Zero;
        return s;
    }
    static Strategy scaled(double kappa) {
        Strategy s;
        s.kind = StrategyKind::Scaled;
        s.scale = kappa;
        return s;
    }
    static Strategy jump(double time, double size,
                         StrategyKind base = StrategyKind::Equilibrium) {
        Strategy s;
        s.kind = StrategyKind::Jump;
        s.base = base;
        s.jumps.push_back({time, size});
        return s;
    }
    static Strategy custom(std::function<double(double, double, double)> rate) {
        Strategy s;
        s.kind = StrategyKind::CustomDrift;
        s.drift = std::move(rate);
        return s;
    }

    /// Multiplier applied to the equilibrium rate (0 when not trading).
    double rate_scale() const {
        switch (kind == StrategyKind::Jump ? base : kind) {
            case StrategyKind::Zero: return 0.0;
            case StrategyKind::Scaled: return scale;
            default: return 1.0;
        }
    }
};

}  // namespace kyle

#endif
