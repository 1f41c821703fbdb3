#pragma once

#include "netls/kernels.hpp"

namespace netls::kernels::detail {

const Table& scalar_table();
#if defined(NETLS_HAVE_AVX2)
const Table& avx2_table();
#endif
#if defined(NETLS_HAVE_NEON)
const Table& neon_table();
#endif

}  // namespace netls::kernels::detail
