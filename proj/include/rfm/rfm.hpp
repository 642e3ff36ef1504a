#pragma once

// Everything at once.

#include "rfm/error.hpp"
#include "rfm/number.hpp"
#include "rfm/matrix.hpp"
#include "rfm/normal_form.hpp"
#include "rfm/expr.hpp"
#include "rfm/torus.hpp"
#include "rfm/line_bundles.hpp"
#include "rfm/fm_absolute.hpp"
#include "rfm/fm_relative.hpp"
#include "rfm/generate.hpp"
#include "rfm/scene.hpp"
#include "rfm/commands.hpp"
