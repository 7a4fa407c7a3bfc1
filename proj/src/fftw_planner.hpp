#pragma once

#include <mutex>

namespace bilop {

/// FFTW's planner is not thread-safe; every plan creation and destruction in
/// the library holds this lock. Executing an existing plan does not.
std::mutex& fftw_planner_mutex();

} // namespace bilop
