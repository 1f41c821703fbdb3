#include "kernels_impl.hpp"

namespace netls::kernels::detail {

const Table& scalar_table() {
    static const Table t{
        &scalar::axpy<double>,
        &scalar::scale<double>,
        &scalar::dot<double>,
        &scalar::gemv<double>,
    };
    return t;
}

}  // namespace netls::kernels::detail
