// Licensed under the terms of the Apache 2.0 license. See LICENSE in the project root.
#pragma once

#include <stdexcept>
#include <string>

namespace webexpert {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define WEBEXPERT_DEFINE_ERROR(Name)      \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

WEBEXPERT_DEFINE_ERROR(EmptyTextError);
WEBEXPERT_DEFINE_ERROR(DimensionMismatchError);
WEBEXPERT_DEFINE_ERROR(UnknownDocError);
WEBEXPERT_DEFINE_ERROR(EmptyClusterError);
WEBEXPERT_DEFINE_ERROR(SummarizerUnavailableError);
WEBEXPERT_DEFINE_ERROR(CitationLeakError);
WEBEXPERT_DEFINE_ERROR(EmptyCorpusError);
WEBEXPERT_DEFINE_ERROR(NoExperiencesError);
WEBEXPERT_DEFINE_ERROR(StaleParentError);
WEBEXPERT_DEFINE_ERROR(ConfigDriftError);
WEBEXPERT_DEFINE_ERROR(CorruptManifestError);
WEBEXPERT_DEFINE_ERROR(VersionGapError);
WEBEXPERT_DEFINE_ERROR(DegenerateVectorError);
WEBEXPERT_DEFINE_ERROR(UnnormalizedModelError);
WEBEXPERT_DEFINE_ERROR(EmptyQuestionError);
WEBEXPERT_DEFINE_ERROR(PlanInvalidError);
WEBEXPERT_DEFINE_ERROR(SpecInfeasibleError);
WEBEXPERT_DEFINE_ERROR(MissingAnnotationsError);
WEBEXPERT_DEFINE_ERROR(InvalidConfigError);

#undef WEBEXPERT_DEFINE_ERROR

}  // namespace webexpert
