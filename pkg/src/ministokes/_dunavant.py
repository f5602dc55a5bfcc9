"""Dunavant symmetric quadrature rules on the triangle, degrees 1 to 20.

Each rule is a list of symmetry orbits with weights normalised to sum to one:

* ``(w,)``: the centroid,
* ``(w, a)``: the three permutations of ``(a, a, 1 - 2a)``,
* ``(w, a, b)``: the six permutations of ``(a, b, 1 - a - b)``.

Coefficients were refined by Newton iteration on the moment equations in
extended precision, starting from the 15-digit published values.
"""

ORBITS = {
    1: [
        (1.0,),
    ],
    2: [
        (0.3333333333333333, 0.16666666666666666),
    ],
    3: [
        (-0.5625,),
        (0.5208333333333334, 0.2),
    ],
    4: [
        (0.22338158967801147, 0.4459484909159649),
        (0.10995174365532187, 0.09157621350977074),
    ],
    5: [
        (0.225,),
        (0.1323941527885062, 0.4701420641051151),
        (0.12593918054482714, 0.10128650732345634),
    ],
    6: [
        (0.11678627572637937, 0.24928674517091043),
        (0.05084490637020682, 0.06308901449150223),
        (0.08285107561837357, 0.053145049844816945, 0.3103524510337844),
    ],
    7: [
        (-0.14957004446768174,),
        (0.1756152574332078, 0.2603459660790398),
        (0.05334723560883849, 0.06513010290221581),
        (0.07711376089025714, 0.04869031542531641, 0.31286549600487384),
    ],
    8: [
        (0.14431560767778717,),
        (0.09509163426728462, 0.4592925882927232),
        (0.10321737053471824, 0.1705693077517602),
        (0.03245849762319808, 0.05054722831703098),
        (0.027230314174434993, 0.008394777409957605, 0.2631128296346381),
    ],
    9: [
        (0.09713579628279884,),
        (0.03133470022713907, 0.4896825191987376),
        (0.07782754100477428, 0.43708959149293664),
        (0.07964773892721025, 0.18820353561903272),
        (0.02557767565869803, 0.04472951339445271),
        (0.043283539377289376, 0.036838412054736286, 0.2219629891607657),
    ],
    10: [
        (0.09081799038275358,),
        (0.036725957756466705, 0.4855776333836574),
        (0.04532105943552794, 0.10948157548503705),
        (0.07275791684542011, 0.14170721941487996, 0.30793983876412095),
        (0.028327242531057485, 0.025003534762686387, 0.2466725606399027),
        (0.009421666963732823, 0.009540815400299458, 0.06680325101220026),
    ],
    11: [
        (0.000927006328960676, 0.5346110482707583),
        (0.07714953491481312, 0.3989693029658552),
        (0.05932297738077407, 0.20330990043128247),
        (0.03618454050341808, 0.11935091228258131),
        (0.013659731002677863, 0.032364948111275896),
        (0.05233711196220407, 0.05017813831049466, 0.3566206482612926),
        (0.020707659639140688, 0.021022016536166296, 0.17148898030404156),
    ],
    12: [
        (0.025731066440455336, 0.48821738977380486),
        (0.043692544538038405, 0.43972439229446025),
        (0.0628582242178851, 0.2712103850121159),
        (0.034796112930708945, 0.12757614554158592),
        (0.006166261051559018, 0.02131735045321037),
        (0.040371557766380926, 0.115343494534698, 0.2757132696855142),
        (0.022356773202303445, 0.022838332222257028, 0.28132558098993954),
        (0.017316231108658892, 0.02573405054833023, 0.11625191590759715),
    ],
    13: [
        (0.0525209234010754,),
        (0.01128014520935039, 0.4950481849396727),
        (0.03142351836227251, 0.4687166351096689),
        (0.04707250250429175, 0.4145213368014544),
        (0.04736358653654755, 0.22939957204264275),
        (0.031167529045829867, 0.11442449519645458),
        (0.007975771465066242, 0.024811391363445994),
        (0.036848402728692276, 0.09485382837918178, 0.26879499705903986),
        (0.01740146330371876, 0.01810077327867841, 0.2917300667342353),
        (0.015521786839063911, 0.022233076674129076, 0.12635738549160422),
    ],
    14: [
        (0.02188358136942889, 0.4889639103621786),
        (0.03278835354412535, 0.41764471934045394),
        (0.051774104507291585, 0.27347752830883865),
        (0.042162588736993016, 0.17720553241254344),
        (0.014433699669776668, 0.0617998830908726),
        (0.004923403602400082, 0.019390961248701048),
        (0.024665753212563674, 0.05712475740364794, 0.17226668782135557),
        (0.038571510787060684, 0.09291624935697182, 0.336861459796345),
        (0.01443630811353384, 0.01464695005565441, 0.29837288213625773),
        (0.005010228838500672, 0.001268330932872025, 0.11897449769695685),
    ],
    15: [
        (0.0019168756428486178, 0.506972916858243),
        (0.04424902727114473, 0.43140635428302265),
        (0.051186548718852115, 0.2776936448471444),
        (0.023687735870687808, 0.12646489104125386),
        (0.01328977569002052, 0.0708083859746859),
        (0.004748916608191847, 0.01896517024107334),
        (0.03855007259959251, 0.13373416196662108, 0.26131137114008746),
        (0.027215814320624268, 0.036366677396916826, 0.3880467670902688),
        (0.002182077366797029, -0.01017488312657067, 0.28571222004991603),
        (0.021505319847731363, 0.03684386987587819, 0.21559966407228406),
        (0.007673942631048671, 0.012459809331198711, 0.10357561657638575),
    ],
    16: [
        (0.046875697427641645,),
        (0.0064058785785849675, 0.4973805419484384),
        (0.04171029673938686, 0.41346943854935236),
        (0.026891484250064424, 0.47045859906699133),
        (0.04213252276164965, 0.2405537499695209),
        (0.030000266842772984, 0.1479657942225728),
        (0.014200098925024185, 0.07546518765747418),
        (0.003582462351273368, 0.016596402623024923),
        (0.032773147460627414, 0.10357569224525202, 0.2965555965798874),
        (0.01529830624844118, 0.020083411655415884, 0.3377230634030791),
        (0.002386244192838686, -0.004341002614138783, 0.20474828164281209),
        (0.0190847927558989, 0.04194178646800984, 0.1893584921306225),
        (0.006850054546541991, 0.014317320230681366, 0.08528361568265723),
    ],
    17: [
        (0.03343719929033097,),
        (0.005093415440633569, 0.49717054055669746),
        (0.014670864527873112, 0.4821763226242277),
        (0.02435087835370584, 0.45023996902012253),
        (0.03110755086865931, 0.400266239376897),
        (0.03125711121830218, 0.2521412679713039),
        (0.02481565433960935, 0.1620470046585685),
        (0.014056073070524066, 0.07587588226061835),
        (0.003194676173785379, 0.0156547269678383),
        (0.008119655319136474, 0.010186928827124813, 0.3343198673637291),
        (0.026805742283075775, 0.13544087167197894, 0.29222153779662097),
        (0.018459993210965694, 0.054423924291355535, 0.31957488542278245),
        (0.008476868534357395, 0.012868560833681902, 0.19070422419242372),
        (0.018292796770040396, 0.06716578241369849, 0.18048321164850425),
        (0.006665632004156037, 0.014663182224794085, 0.08071131367964327),
    ],
    18: [
        (0.030809939937284928,),
        (0.009072436679469198, 0.4933448086309282),
        (0.018761316939841555, 0.46921059424176625),
        (0.019441097985669353, 0.43628139588625886),
        (0.027753948610482124, 0.39484617067289457),
        (0.03225622535138636, 0.24979456880320167),
        (0.025074032616903438, 0.16143219374385234),
        (0.015271927971706695, 0.07659822748546842),
        (0.006793922022801969, 0.02425243935298194),
        (-0.0022230987296956426, 0.04314636721602845),
        (0.006331914076468731, 0.00843053620251152, 0.3589114949401578),
        (0.02725753804911607, 0.13118655173737256, 0.29440247675185166),
        (0.017676785649488675, 0.05020315156587293, 0.3250178016416442),
        (0.01837948463806688, 0.06632926381093537, 0.18473755966593228),
        (0.008104732808205485, 0.011996194566268813, 0.21879680001260146),
        (0.00763412907070782, 0.014858100590115997, 0.10117959713581831),
        (4.618766078299674e-05, -0.03522201529102156, 0.020874755282361383),
    ],
    19: [
        (0.03290633138887251,),
        (0.01033073189129027, 0.4896099870728988),
        (0.022387247263015376, 0.4545368926978221),
        (0.030266125869434966, 0.4014166806493843),
        (0.030490967802163003, 0.25555165440314165),
        (0.024159212741630593, 0.17707794215217132),
        (0.016050803586824838, 0.11006105322789127),
        (0.008084580261790644, 0.05552862425191437),
        (0.002079362027482609, 0.01262186377722206),
        (0.003884876905018368, 0.003611417848480369, 0.39575478735746833),
        (0.02557416061200758, 0.13446675453089113, 0.3079299838804049),
        (0.008880903573348765, 0.014446025776097713, 0.2645669484066384),
        (0.016124546761737954, 0.04693357883832014, 0.3585393522057056),
        (0.0024919418174370986, 0.002861120350361909, 0.15780740596859535),
        (0.018242840118955536, 0.07505059697598675, 0.22386142409778256),
        (0.010258563736223369, 0.034647074816529226, 0.1424216011135865),
        (0.0037999288553097637, 0.010161119296309824, 0.06549462808289568),
    ],
    20: [
        (0.0330570555345387,),
        (0.000867019243800088, 0.5009504640992479),
        (0.0116600526898656, 0.4882129578500949),
        (0.022876936343032415, 0.4551366819046724),
        (0.030448982668186974, 0.40199625928801874),
        (0.03062489172491399, 0.25589290973430934),
        (0.024368057680370873, 0.17648825596065315),
        (0.01599743206224454, 0.10417085524453626),
        (0.007698303065628158, 0.0530689625992276),
        (-0.0006320617806471413, 0.04161872586430964),
        (0.001751134290922101, 0.011581921374389143),
        (0.01646583918957576, 0.04874158366483935, 0.3448557702290011),
        (0.004839033540484805, 0.006314115948605203, 0.37784326959485404),
        (0.025804906534650014, 0.13431652054734777, 0.3066354790623568),
        (0.008471091054440646, 0.013973893962392151, 0.2494193627747422),
        (0.01835491410627975, 0.07554913290976416, 0.21277572480280163),
        (0.0007044046779082165, -0.008368153208226621, 0.14696543605323914),
        (0.010112684927461901, 0.026686063258714077, 0.13772697882892315),
        (0.003573909385950325, 0.010547719294140839, 0.05969610914900654),
    ],
}
