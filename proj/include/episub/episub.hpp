#pragma once

#include "algebra.hpp"
#include "canonical.hpp"
#include "certificates.hpp"
#include "core.hpp"
#include "epi.hpp"
#include "free_algebra.hpp"
#include "hom.hpp"
#include "io.hpp"
#include "quasivariety.hpp"
#include "structure.hpp"
