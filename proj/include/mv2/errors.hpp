#pragma once

#include <stdexcept>
#include <string>

namespace mv2 {

enum class Species { X = 0, Y = 1 };

inline const char* species_name(Species s) { return s == Species::X ? "x" : "y"; }

// A particle position became non-finite. Carries enough context to locate
// the offending update in a long run.
class BlowUpError : public std::runtime_error {
public:
    BlowUpError(Species species, int particle, int step, double time)
        : std::runtime_error("blow-up: species " + std::string(species_name(species)) +
                             ", particle " + std::to_string(particle) + ", step " +
                             std::to_string(step) + ", t=" + std::to_string(time)),
          species(species), particle(particle), step(step), time(time) {}
    Species species;
    int particle;
    int step;
    double time;
};

class CflError : public std::runtime_error {
public:
    CflError(double dt, double dt_max)
        : std::runtime_error("time step " + std::to_string(dt) +
                             " violates CFL bound " + std::to_string(dt_max)),
          dt(dt), dt_max(dt_max) {}
    double dt;
    double dt_max;
};

class QuadratureDomainError : public std::runtime_error {
public:
    explicit QuadratureDomainError(const std::string& what) : std::runtime_error(what) {}
};

class GridTooSmallError : public std::runtime_error {
public:
    explicit GridTooSmallError(const std::string& what) : std::runtime_error(what) {}
};

// Config document does not match the published schema. `path` names the
// offending field, e.g. "model.a".
class SchemaError : public std::runtime_error {
public:
    SchemaError(std::string path, const std::string& what)
        : std::runtime_error(path + ": " + what), path(std::move(path)) {}
    std::string path;
};

} // namespace mv2
