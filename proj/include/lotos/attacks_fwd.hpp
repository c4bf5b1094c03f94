#pragma once

#include <cstdint>
#include <optional>

namespace lotos {

enum class AttackNorm { L2, Linf };

struct AttackConfig {
    double epsilon = 0.04;
    std::size_t steps = 50;
    double step_size = 0.0;  // 0 means 2.5 * epsilon / steps
    AttackNorm norm = AttackNorm::L2;
    bool random_start = false;
    std::optional<std::size_t> targeted;  // target class for targeted attacks
    std::uint64_t seed = 1;               // random starts only

    double effective_step() const {
        if (step_size > 0.0) return step_size;
        return steps > 0 ? 2.5 * epsilon / static_cast<double>(steps) : 0.0;
    }
};

}  // namespace lotos
