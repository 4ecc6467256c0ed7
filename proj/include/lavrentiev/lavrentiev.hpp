#ifndef LAVRENTIEV_LAVRENTIEV_HPP
#define LAVRENTIEV_LAVRENTIEV_HPP

#include "lavrentiev/space.hpp"
#include "lavrentiev/operators.hpp"
#include "lavrentiev/constraints.hpp"
#include "lavrentiev/solver.hpp"
#include "lavrentiev/experiments.hpp"
#include "lavrentiev/diagnostics.hpp"

#endif  // LAVRENTIEV_LAVRENTIEV_HPP
