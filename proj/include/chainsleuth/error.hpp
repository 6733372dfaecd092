#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chainsleuth {

enum class errc {
    empty_sample,
    unknown_class_code,
    missing_file,
    malformed_row,
    dangling_reference,
    duplicate_class,
    missing_class,
    parse_error,
    balance_violation,
    io_error,
    unknown_address,
    unknown_feature,
    unknown_node,
    non_bipartite_edge,
    empty_fit,
    single_class_training_set,
    wrong_model_kind,
    feature_mismatch,
    id_mismatch,
    model_count_too_small,
    config_invalid,
};

std::string_view errc_name(errc code) noexcept;

// Single exception type for the library; callers discriminate on code().
class error : public std::runtime_error {
public:
    error(errc code, const std::string &msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

} // namespace chainsleuth
