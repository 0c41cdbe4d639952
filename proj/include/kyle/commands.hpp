#ifndef KYLE_COMMANDS_HPP
#define KYLE_COMMANDS_HPP

#include "kyle/config.hpp"

namespace kyle {

// Exit codes: 0 success, 1 failed checks or runtime failure, 2 usage/config
// error (ConfigError propagates to the caller for that case).

int cmd_validate(const ExperimentConfig& cfg);
int cmd_simulate(const ExperimentConfig& cfg);
int cmd_verify(const ExperimentConfig& cfg);
int cmd_sweep(const ExperimentConfig& cfg);
int cmd_density(const ExperimentConfig& cfg);

}  // namespace kyle

#endif
