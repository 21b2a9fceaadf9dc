#pragma once

namespace dnt {

/// Selects between the OpenMP kernel and its serial reference.
/// Both paths produce bit-identical results; the serial one exists for
/// testing and for nesting inside an already-parallel region.
enum class Exec { serial, parallel };

}  // namespace dnt
