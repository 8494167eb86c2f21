#pragma once

#include "cellnet/data.hpp"
#include "cellnet/evaluation.hpp"
#include "cellnet/geometry.hpp"
#include "cellnet/gradcheck.hpp"
#include "cellnet/init.hpp"
#include "cellnet/model.hpp"
#include "cellnet/objective.hpp"
#include "cellnet/optim.hpp"
#include "cellnet/serialize.hpp"
#include "cellnet/trainer.hpp"
