// SPDX-License-Identifier: Apache-2.0
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <optional>

#include "ulb/bench.hpp"
#include "ulb/kernels.hpp"
#include "ulb/layout.hpp"
#include "ulb/parallel.hpp"
#include "ulb/quant.hpp"
#include "ulb/roofline.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

using U8Array = py::array_t<uint8_t, py::array::c_style | py::array::forcecast>;
using I8Array = py::array_t<int8_t, py::array::c_style | py::array::forcecast>;
using F32Array = py::array_t<float, py::array::c_style | py::array::forcecast>;
using I32Array = py::array_t<int32_t, py::array::c_style | py::array::forcecast>;

// 1-D shape; the scalar array_t(ssize_t) constructor is avoided because old
// pybind11 releases build zero-stride arrays from it.
std::vector<py::ssize_t> make_shape(size_t n) {
    return {static_cast<py::ssize_t>(n)};
}

ulb::DenseCodeMatrix codes_from_numpy(const U8Array& codes) {
    if (codes.ndim() != 2) throw py::value_error("codes must be a 2-D array");
    ulb::DenseCodeMatrix c;
    c.rows_m = codes.shape(0);
    c.cols_k = codes.shape(1);
    c.codes.assign(codes.data(), codes.data() + codes.size());
    return c;
}

std::optional<std::vector<float>> scales_from_numpy(const std::optional<F32Array>& scales) {
    if (!scales) return std::nullopt;
    if (scales->ndim() != 1) throw py::value_error("row_scales must be a 1-D array");
    return std::vector<float>(scales->data(), scales->data() + scales->size());
}

py::array_t<int8_t> int8_matrix_to_numpy(const ulb::Int8Matrix& m) {
    py::array_t<int8_t> out({m.rows_m, m.cols_k});
    std::memcpy(out.mutable_data(), m.values.data(), m.values.size());
    return out;
}

py::array_t<int32_t> acc_to_numpy(const ulb::AccumulatorVector& acc) {
    py::array_t<int32_t> out(make_shape(acc.size()));
    std::memcpy(out.mutable_data(), acc.data(), acc.size() * sizeof(int32_t));
    return out;
}

ulb::Int8Matrix int8_matrix_from_numpy(const I8Array& w) {
    if (w.ndim() != 2) throw py::value_error("weights must be a 2-D array");
    ulb::Int8Matrix m;
    m.rows_m = w.shape(0);
    m.cols_k = w.shape(1);
    m.values.assign(w.data(), w.data() + w.size());
    return m;
}

ulb::Variant resolve(std::optional<ulb::Variant> v) {
    return v.value_or(ulb::preferred_variant());
}

}  // namespace

PYBIND11_MODULE(_ulb, m) {
    m.doc() = "ultra-low-bit (1/2-bit) weight GEMV kernels, packed layouts and roofline models";

    py::enum_<ulb::Variant>(m, "Variant")
        .value("scalar", ulb::Variant::scalar)
        .value("simd", ulb::Variant::simd);

    py::enum_<ulb::Bound>(m, "Bound")
        .value("bandwidth_bound", ulb::Bound::bandwidth_bound)
        .value("compute_bound", ulb::Bound::compute_bound);

    py::class_<ulb::Codebook4>(m, "Codebook4")
        .def(py::init())
        .def(py::init([](const std::array<int8_t, 4>& values) {
                 return ulb::Codebook4{values};
             }),
             "values"_a)
        .def_readwrite("values", &ulb::Codebook4::values)
        .def("__repr__", [](const ulb::Codebook4& cb) {
            return "Codebook4([" + std::to_string(cb.values[0]) + ", " +
                   std::to_string(cb.values[1]) + ", " + std::to_string(cb.values[2]) + ", " +
                   std::to_string(cb.values[3]) + "])";
        });

    py::class_<ulb::PackedWeightTensor>(m, "PackedWeightTensor")
        .def_readonly("bit_width", &ulb::PackedWeightTensor::bit_width)
        .def_readonly("rows_m", &ulb::PackedWeightTensor::rows_m)
        .def_readonly("cols_k", &ulb::PackedWeightTensor::cols_k)
        .def_readonly("block_m", &ulb::PackedWeightTensor::block_m)
        .def_readonly("block_k", &ulb::PackedWeightTensor::block_k)
        .def_readonly("codebook", &ulb::PackedWeightTensor::codebook)
        .def_property_readonly("row_scales",
                               [](const ulb::PackedWeightTensor& t) -> py::object {
                                   if (!t.row_scales) return py::none();
                                   F32Array out(make_shape(t.row_scales->size()));
                                   std::memcpy(out.mutable_data(), t.row_scales->data(),
                                               t.row_scales->size() * sizeof(float));
                                   return out;
                               })
        .def_property_readonly("payload",
                               [](const ulb::PackedWeightTensor& t) {
                                   return py::bytes(reinterpret_cast<const char*>(t.payload.data()),
                                                    t.payload.size());
                               })
        .def("__repr__", [](const ulb::PackedWeightTensor& t) {
            return "PackedWeightTensor(int" + std::to_string(t.bit_width) + ", " +
                   std::to_string(t.rows_m) + "x" + std::to_string(t.cols_k) +
                   ", block_k=" + std::to_string(t.block_k) + ")";
        });

    py::class_<ulb::QuantizedVector>(m, "QuantizedVector")
        .def(py::init([](const I8Array& values, float scale) {
                 if (scale <= 0.0f) throw py::value_error("scale must be positive");
                 ulb::QuantizedVector q;
                 q.values.assign(values.data(), values.data() + values.size());
                 q.scale = scale;
                 return q;
             }),
             "values"_a, "scale"_a = 1.0f)
        .def_property_readonly("values",
                               [](const ulb::QuantizedVector& q) {
                                   I8Array out(make_shape(q.values.size()));
                                   std::memcpy(out.mutable_data(), q.values.data(), q.values.size());
                                   return out;
                               })
        .def_readonly("scale", &ulb::QuantizedVector::scale);

    // layout
    m.def(
        "pack_int2",
        [](const U8Array& codes, int64_t block_k, const ulb::Codebook4& codebook,
           const std::optional<F32Array>& row_scales) {
            return ulb::pack_int2(codes_from_numpy(codes), block_k, codebook,
                                  scales_from_numpy(row_scales));
        },
        "codes"_a, "block_k"_a = 0, "codebook"_a = ulb::Codebook4{}, "row_scales"_a = py::none());
    m.def(
        "pack_int1",
        [](const U8Array& codes, int64_t block_k, const std::optional<F32Array>& row_scales) {
            return ulb::pack_int1(codes_from_numpy(codes), block_k, scales_from_numpy(row_scales));
        },
        "codes"_a, "block_k"_a = 0, "row_scales"_a = py::none());
    m.def("decode_codes", [](const ulb::PackedWeightTensor& t) {
        const auto codes = ulb::decode_codes(t);
        py::array_t<uint8_t> out({codes.rows_m, codes.cols_k});
        std::memcpy(out.mutable_data(), codes.codes.data(), codes.codes.size());
        return out;
    });
    m.def("decode_weights",
          [](const ulb::PackedWeightTensor& t) { return int8_matrix_to_numpy(ulb::decode_weights(t)); });
    m.def("write_packed", &ulb::write_packed_file, "tensor"_a, "path"_a);
    m.def("read_packed", &ulb::read_packed_file, "path"_a);
    m.def("default_block_k", &ulb::default_block_k, "cols_k"_a);
    m.def("packed_payload_bytes", &ulb::packed_payload_bytes, "rows_m"_a, "cols_k"_a, "bit_width"_a);

    // quant
    m.def("quantize_activations", [](const F32Array& x) {
        return ulb::quantize_activations(std::span<const float>(x.data(), x.size()));
    });
    m.def(
        "dequantize_output",
        [](const I32Array& acc, float act_scale, const std::optional<F32Array>& row_scales) {
            const ulb::AccumulatorVector a(acc.data(), acc.data() + acc.size());
            const auto out = ulb::dequantize_output(a, act_scale, scales_from_numpy(row_scales));
            F32Array result(make_shape(out.size()));
            std::memcpy(result.mutable_data(), out.data(), out.size() * sizeof(float));
            return result;
        },
        "acc"_a, "act_scale"_a, "row_scales"_a = py::none());

    // kernels
    m.def("simd_available", &ulb::simd_available);
    m.def("preferred_variant", &ulb::preferred_variant);
    m.def(
        "gemv_int8_ref",
        [](const I8Array& w, const ulb::QuantizedVector& act, std::optional<ulb::Variant> v) {
            return acc_to_numpy(ulb::gemv_int8_ref(int8_matrix_from_numpy(w), act,
                                                   v.value_or(ulb::Variant::scalar)));
        },
        "weights"_a, "act"_a, "variant"_a = py::none());
    m.def(
        "gemv_int2",
        [](const ulb::PackedWeightTensor& t, const ulb::QuantizedVector& act,
           std::optional<ulb::Variant> v) { return acc_to_numpy(ulb::gemv_int2(t, act, resolve(v))); },
        "packed"_a, "act"_a, "variant"_a = py::none());
    m.def(
        "gemv_int1",
        [](const ulb::PackedWeightTensor& t, const ulb::QuantizedVector& act,
           std::optional<ulb::Variant> v) { return acc_to_numpy(ulb::gemv_int1(t, act, resolve(v))); },
        "packed"_a, "act"_a, "variant"_a = py::none());
    m.def(
        "parallel_gemv",
        [](const ulb::PackedWeightTensor& t, const ulb::QuantizedVector& act, int workers,
           int64_t chunk_blocks, std::optional<ulb::Variant> v) {
            return acc_to_numpy(ulb::parallel_gemv(t, act, {workers, chunk_blocks}, resolve(v)));
        },
        "packed"_a, "act"_a, "workers"_a, "chunk_blocks"_a = 1, "variant"_a = py::none());
    m.def(
        "upconvert_block_int2",
        [](const py::bytes& unit, const ulb::Codebook4& cb) {
            const std::string raw = unit;
            if (raw.size() != 32) throw py::value_error("unit must be exactly 32 bytes");
            const auto out = ulb::upconvert_block_int2(
                std::span<const uint8_t, 32>(reinterpret_cast<const uint8_t*>(raw.data()), 32), cb);
            I8Array result(make_shape(128));
            std::memcpy(result.mutable_data(), out.data(), out.size());
            return result;
        },
        "unit"_a, "codebook"_a = ulb::Codebook4{});
    m.def("upconvert_word_int1", [](uint32_t word) {
        const auto out = ulb::upconvert_word_int1(word);
        I8Array result(make_shape(32));
        std::memcpy(result.mutable_data(), out.data(), out.size());
        return result;
    });

    // roofline
    py::class_<ulb::PlatformSpec>(m, "PlatformSpec")
        .def(py::init([](std::string name, int p_cores, int e_cores, double p_freq_ghz,
                         double e_freq_ghz, double read_bw_gbs, std::optional<double> max_power_w) {
                 return ulb::PlatformSpec{std::move(name), p_cores,     e_cores,    p_freq_ghz,
                                          e_freq_ghz,      read_bw_gbs, max_power_w};
             }),
             "name"_a, "p_cores"_a, "e_cores"_a, "p_freq_ghz"_a, "e_freq_ghz"_a, "read_bw_gbs"_a,
             "max_power_w"_a = py::none())
        .def_readonly("name", &ulb::PlatformSpec::name)
        .def_readonly("p_cores", &ulb::PlatformSpec::p_cores)
        .def_readonly("e_cores", &ulb::PlatformSpec::e_cores)
        .def_readonly("p_freq_ghz", &ulb::PlatformSpec::p_freq_ghz)
        .def_readonly("e_freq_ghz", &ulb::PlatformSpec::e_freq_ghz)
        .def_readonly("read_bw_gbs", &ulb::PlatformSpec::read_bw_gbs)
        .def_readonly("max_power_w", &ulb::PlatformSpec::max_power_w);

    py::class_<ulb::KernelProfile>(m, "KernelProfile")
        .def(py::init([](std::string name, double bytes_per_vector_b, double gamma_p,
                         double gamma_e) {
                 return ulb::KernelProfile{std::move(name), bytes_per_vector_b, gamma_p, gamma_e};
             }),
             "name"_a, "bytes_per_vector_b"_a, "gamma_p"_a, "gamma_e"_a)
        .def_readonly("name", &ulb::KernelProfile::name)
        .def_readonly("bytes_per_vector_b", &ulb::KernelProfile::bytes_per_vector_b)
        .def_readonly("gamma_p", &ulb::KernelProfile::gamma_p)
        .def_readonly("gamma_e", &ulb::KernelProfile::gamma_e);

    py::class_<ulb::RooflineReport>(m, "RooflineReport")
        .def_readonly("platform", &ulb::RooflineReport::platform)
        .def_readonly("profile", &ulb::RooflineReport::profile)
        .def_readonly("beta_p", &ulb::RooflineReport::beta_p)
        .def_readonly("beta_e", &ulb::RooflineReport::beta_e)
        .def_readonly("ebw_p", &ulb::RooflineReport::ebw_p)
        .def_readonly("ebw_e", &ulb::RooflineReport::ebw_e)
        .def_readonly("per_core_gbs_p", &ulb::RooflineReport::per_core_gbs_p)
        .def_readonly("per_core_gbs_e", &ulb::RooflineReport::per_core_gbs_e)
        .def_readonly("aggregate_gbs", &ulb::RooflineReport::aggregate_gbs)
        .def_readonly("bound_p", &ulb::RooflineReport::bound_p)
        .def_readonly("bound_e", &ulb::RooflineReport::bound_e);

    m.def("cycles_per_vector", &ulb::cycles_per_vector, "bytes_b"_a, "beta"_a, "gamma"_a);
    m.def("effective_bw", &ulb::effective_bw, "beta"_a, "bytes_b"_a, "gamma"_a);
    m.def("platform_betas", &ulb::platform_betas, "spec"_a);
    m.def("modeled_aggregate_bw", &ulb::modeled_aggregate_bw, "spec"_a, "profile"_a);
    m.def("amdahl_speedup", &ulb::amdahl_speedup, "alpha"_a, "x"_a);
    m.def("builtin_platform", &ulb::builtin_platform, "name"_a,
          py::return_value_policy::reference);
    m.def("builtin_profile", &ulb::builtin_profile, "name"_a, py::return_value_policy::reference);
    m.def("builtin_platform_names", &ulb::builtin_platform_names);
    m.def("builtin_profile_names", &ulb::builtin_profile_names);

    // bench helpers
    m.def("weight_payload_bytes", &ulb::weight_payload_bytes, "m"_a, "k"_a, "bits"_a);
    m.def("ideal_seconds", &ulb::ideal_seconds, "m"_a, "k"_a, "bits"_a, "read_bw_gbs"_a);
}
