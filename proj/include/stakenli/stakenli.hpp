#pragma once

#include "stakenli/core.hpp"
#include "stakenli/entity_pipeline.hpp"
#include "stakenli/error.hpp"
#include "stakenli/evaluate.hpp"
#include "stakenli/ingest.hpp"
#include "stakenli/knowledge.hpp"
#include "stakenli/manifest.hpp"
#include "stakenli/nli_transform.hpp"
#include "stakenli/sidecar.hpp"
#include "stakenli/similarity.hpp"
#include "stakenli/text.hpp"
#include "stakenli/union_find.hpp"
#include "stakenli/zeroshot.hpp"
