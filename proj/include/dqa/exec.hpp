#pragma once

namespace dqa {

// Kernel execution policy. Serial paths are the reference implementations;
// parallel paths use OpenMP and must agree with them (exactly, unless a
// function documents otherwise).
enum class Exec { serial, parallel };

}  // namespace dqa
