#ifndef IVMBL_IVMBL_HPP_
#define IVMBL_IVMBL_HPP_

#include "ivmbl/bands.hpp"
#include "ivmbl/blik.hpp"
#include "ivmbl/dataset.hpp"
#include "ivmbl/em_pava.hpp"
#include "ivmbl/empirical.hpp"
#include "ivmbl/error.hpp"
#include "ivmbl/hypothesis.hpp"
#include "ivmbl/io.hpp"
#include "ivmbl/isotonic.hpp"
#include "ivmbl/parallel.hpp"
#include "ivmbl/plugin.hpp"
#include "ivmbl/rng.hpp"
#include "ivmbl/scenario.hpp"
#include "ivmbl/study.hpp"

namespace ivmbl {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ivmbl

#endif  // IVMBL_IVMBL_HPP_
