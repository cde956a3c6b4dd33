#pragma once

namespace ergolearn {

inline constexpr const char* kLibraryVersion = "1.0.0";

/* Version of the on-disk config/summary layout. Consolidation refuses to
 * mix documents with a different value. */
inline constexpr int kSchemaVersion = 1;

}  // namespace ergolearn
