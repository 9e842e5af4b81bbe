#pragma once

#include "sobrem/acl1d.hpp"
#include "sobrem/capacity.hpp"
#include "sobrem/exact.hpp"
#include "sobrem/grid.hpp"
#include "sobrem/hausdorff.hpp"
#include "sobrem/io.hpp"
#include "sobrem/linescan.hpp"
#include "sobrem/parallel.hpp"
#include "sobrem/rational.hpp"
#include "sobrem/runconfig.hpp"
#include "sobrem/serialize.hpp"
#include "sobrem/setgen.hpp"
#include "sobrem/verdict.hpp"
